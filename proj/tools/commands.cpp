#include "commands.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/eval/fmd.hpp"
#include "style_erd/io/bvh.hpp"
#include "style_erd/io/clip_cache.hpp"
#include "style_erd/io/synth.hpp"
#include "style_erd/model/checkpoint_io.hpp"
#include "style_erd/model/session.hpp"
#include "style_erd/nn/checkpoint.hpp"
#include "style_erd/service/latency.hpp"
#include "style_erd/service/server.hpp"
#include "style_erd/train/experiment.hpp"

#include <nlohmann/json.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>

namespace style_erd::cli {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

train::ExperimentConfig experiment_from(const TrainArgs& a) {
  train::ExperimentConfig cfg =
      a.config.empty() ? train::ExperimentConfig::from_json(json::object()) : train::ExperimentConfig::from_json(read_json(a.config));
  if (!a.in.empty()) cfg.data.clips = a.in;
  if (a.seed) cfg.train.seed = *a.seed;
  cfg.train.no_adv = cfg.train.no_adv || a.no_adv;
  cfg.train.no_per = cfg.train.no_per || a.no_per;
  cfg.train.no_attention = cfg.train.no_attention || a.no_attention;
  cfg.train.zero_init_states = cfg.train.zero_init_states || a.zero_init_states;
  if (!a.classifier.empty()) cfg.classifier_checkpoint = a.classifier;
  return cfg;
}

// Brings every clip to `fps`, failing for non-integer ratios.
std::vector<io::MotionClip> at_rate(std::vector<io::MotionClip> clips, double fps) {
  for (auto& c : clips) {
    if (std::fabs(c.fps - fps) > 1e-6 * fps) c = io::downsample(c, fps);
  }
  return clips;
}

}  // namespace

int synth_data(const SynthArgs& a) {
  io::SynthDatasetConfig s;
  if (!a.config.empty()) {
    const json j = read_json(a.config);
    s.styles = j.value("styles", s.styles);
    s.contents = j.value("contents", s.contents);
    s.clips_per_pair = j.value("clips_per_pair", s.clips_per_pair);
    s.length = j.value("length", s.length);
    s.fps = j.value("fps", s.fps);
    s.seed = j.value("seed", s.seed);
  }
  if (a.seed) s.seed = *a.seed;
  if (a.styles) s.styles = *a.styles;
  if (a.contents) s.contents = *a.contents;
  if (a.clips_per_pair) s.clips_per_pair = *a.clips_per_pair;
  if (a.length) s.length = *a.length;
  if (a.fps) s.fps = *a.fps;
  const auto clips = io::make_synthetic_dataset(s);
  io::save_clip_cache(a.out, clips);
  if (!a.bvh_dir.empty()) {
    std::filesystem::create_directories(a.bvh_dir);
    json labels = json::object();
    for (const auto& c : clips) {
      io::save_bvh(a.bvh_dir / (c.id + ".bvh"), c);
      labels[c.id] = {{"style", c.style.index}, {"content", c.content.index}};
    }
    write_json(a.bvh_dir / "labels.json", {{"styles", s.styles}, {"contents", s.contents}, {"clips", labels}});
  }
  std::cout << json{{"clips", clips.size()}, {"out", a.out.string()}}.dump() << '\n';
  return 0;
}

int pretrain_classifier(const TrainArgs& a) {
  train::ExperimentConfig cfg = experiment_from(a);
  if (a.seed) cfg.classifier.seed = *a.seed;
  if (a.epochs) cfg.classifier.epochs = *a.epochs;
  const train::PreparedData data = train::prepare_data(cfg);
  const model::ContentClassifier cls = train::pretrain_classifier(data.model, data.train, cfg.classifier);
  model::save_classifier(a.out, cls);
  json report = {{"out", a.out.string()},
                 {"train_windows", data.train.size()},
                 {"train_accuracy", train::classifier_accuracy(cls, data.train)}};
  if (!data.test.empty()) report["test_accuracy"] = train::classifier_accuracy(cls, data.test);
  std::cout << report.dump() << '\n';
  return 0;
}

int train(const TrainArgs& a) {
  train::ExperimentConfig cfg = experiment_from(a);
  if (a.epochs) cfg.train.epochs = *a.epochs;
  const train::PreparedData data = train::prepare_data(cfg);
  std::cerr << "training on " << data.train.size() << " windows (" << data.test.size() << " held out)\n";

  std::optional<model::ContentClassifier> cls;
  if (!cfg.train.no_per) {
    if (!cfg.classifier_checkpoint.empty()) {
      cls = model::load_classifier(cfg.classifier_checkpoint);
    } else {
      cls = train::pretrain_classifier(data.model, data.train, cfg.classifier);
      if (!data.test.empty()) {
        std::cerr << "classifier held-out accuracy " << train::classifier_accuracy(*cls, data.test) << '\n';
      }
    }
  }
  train::Trainer trainer(data.model, cfg.train, cls ? &*cls : nullptr);
  std::ofstream log_file;
  std::ostream* log = &std::cout;
  if (!a.log.empty()) {
    log_file.open(a.log);
    if (!log_file) throw std::runtime_error("cannot write " + a.log.string());
    log = &log_file;
  }
  trainer.fit(data.train, log);
  model::save_model(a.out, trainer.generator(), trainer.discriminator(),
                    {{"experiment", cfg.to_json()}, {"labels", data.label_names}, {"epochs", cfg.train.epochs}});
  std::cerr << "wrote " << a.out.string() << '\n';
  return 0;
}

int transfer(const TransferArgs& a) {
  const model::Generator gen = model::load_generator(a.checkpoint);
  const model::ModelConfig& mc = gen.config();
  const double fps = a.fps.value_or(mc.fps);
  if (std::fabs(fps - mc.fps) > 1e-6 * mc.fps) {
    throw UnsupportedRateError("the model runs at " + std::to_string(mc.fps) + " fps; --fps " + std::to_string(fps) +
                               " cannot be used");
  }
  auto clips = io::load_clips(a.in);
  auto it = clips.begin();
  if (!a.clip.empty()) {
    it = std::find_if(clips.begin(), clips.end(), [&](const io::MotionClip& c) { return c.id == a.clip; });
    if (it == clips.end()) throw std::runtime_error("no clip '" + a.clip + "' in " + a.in.string());
  }
  io::MotionClip clip = *it;
  if (clip.skeleton.joint_count() != mc.joints()) {
    throw ShapeError(a.in.string() + " has " + std::to_string(clip.skeleton.joint_count()) + " joints, the model " +
                     std::to_string(mc.joints()));
  }
  if (clip.skeleton.parents != mc.skeleton.parents) {
    throw ShapeError(a.in.string() + ": joint hierarchy differs from the model skeleton");
  }
  if (std::fabs(clip.fps - fps) > 1e-6 * fps) clip = io::downsample(clip, fps);

  model::TargetSpec target;
  target.style = a.target_style;
  target.second_style = a.second_style;
  target.alpha = a.alpha;
  target.validate(mc.styles);
  io::MotionClip out = clip;
  out.frames = model::transfer_offline(gen, clip.frames, StyleLabel(a.source_style, mc.styles),
                                       ContentLabel(a.content, mc.contents), target);
  io::save_bvh(a.out, out);
  std::filesystem::path sidecar = a.out;
  sidecar.replace_extension(".json");
  write_json(sidecar, {{"input", a.in.string()},
                       {"clip", clip.id},
                       {"checkpoint", a.checkpoint.string()},
                       {"source_style", a.source_style},
                       {"content", a.content},
                       {"target_style", target.style},
                       {"second_style", target.second_style ? json(*target.second_style) : json(nullptr)},
                       {"alpha", target.alpha},
                       {"fps", fps},
                       {"frames", out.length()}});
  std::cout << json{{"out", a.out.string()}, {"frames", out.length()}}.dump() << '\n';
  return 0;
}

int serve(const ServeArgs& a) {
  const model::Generator gen = model::load_generator(a.checkpoint);
  service::SessionOptions session;
  session.stats_every = a.stats_every;
  const json header = nn::load_checkpoint(a.checkpoint).header;
  if (header.contains("labels") && header["labels"].is_object()) session.label_names = header["labels"];

  const std::string name = a.transport.empty() ? (a.ui.empty() ? "stdio" : "ws") : a.transport;
  const service::Transport transport = service::parse_transport(name);
  if (transport == service::Transport::stdio) {
    if (!a.ui.empty()) throw ContractError("--ui needs the ws transport");
    std::ios::sync_with_stdio(false);
    service::serve_stream(gen, std::cin, std::cout, session);
    return 0;
  }
  if (transport == service::Transport::tcp && !a.ui.empty()) throw ContractError("--ui needs the ws transport");

  // Workers inherit a blocked SIGINT/SIGTERM; this thread waits for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::ServeOptions o;
  o.transport = transport;
  o.host = a.host;
  o.port = a.port;
  o.ui_root = a.ui;
  o.session = session;
  service::Server server(gen, o);
  const unsigned short port = server.start();
  std::cerr << "listening on " << a.host << ':' << port << " (" << name << ")\n";
  std::cout << json{{"host", a.host}, {"port", port}, {"transport", name}}.dump() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  server.wait();
  return 0;
}

int bench(const BenchArgs& a) {
  std::optional<model::Generator> gen;
  if (!a.checkpoint.empty()) {
    gen.emplace(model::load_generator(a.checkpoint));
  } else {
    json m = a.config.empty() ? json::object() : read_json(a.config);
    if (!m.contains("skeleton")) m["skeleton"] = model::skeleton_to_json(io::synth_skeleton());
    gen.emplace(model::ModelConfig::from_json(m), a.seed);
  }
  service::BenchOptions opts;
  opts.seed = a.seed;
  if (a.target_style) {
    opts.target = model::TargetSpec{};
    opts.target->style = *a.target_style;
  }
  const service::LatencyReport r = service::bench_latency(*gen, a.frames, opts);
  std::cout << r.to_json().dump() << '\n';
  if (!a.out.empty()) write_json(a.out, r.to_json(true));
  return 0;
}

int eval_fmd(const FmdArgs& a) {
  const auto clips_a = at_rate(io::load_clips(a.set_a), a.fps);
  const auto clips_b = at_rate(io::load_clips(a.set_b), a.fps);
  std::optional<eval::FmdExtractor> extractor;
  if (!a.extractor.empty()) extractor.emplace(eval::load_fmd_extractor(a.extractor));
  const int window = extractor ? extractor->window() : io::kDefaultWindow;
  const auto wa = io::window_clips(clips_a, window).windows;
  const auto wb = io::window_clips(clips_b, window).windows;
  if (wa.size() < 2 || wb.size() < 2) throw CoverageError("each set needs at least two windows");
  if (!extractor) {
    std::vector<io::MotionWindow> both = wa;
    both.insert(both.end(), wb.begin(), wb.end());
    eval::ExtractorTraining et;
    et.seed = a.seed;
    if (a.epochs) et.epochs = *a.epochs;
    extractor.emplace(eval::train_fmd_extractor(both, et));
  }
  if (!a.save_extractor.empty()) eval::save_fmd_extractor(a.save_extractor, *extractor);
  const eval::FmdResult r = eval::compute_fmd(eval::rotation_input(wa), eval::rotation_input(wb), *extractor);
  const json report = eval::fmd_report(r, a.set_a.string(), a.set_b.string(), *extractor);
  std::cout << report.dump() << '\n';
  if (!a.out.empty()) write_json(a.out, report);
  return 0;
}

}  // namespace style_erd::cli
