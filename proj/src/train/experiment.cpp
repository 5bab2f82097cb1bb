#include "style_erd/train/experiment.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/io/clip_cache.hpp"

#include <algorithm>
#include <cmath>

namespace style_erd::train {

using nlohmann::json;

namespace {

json synth_to_json(const io::SynthDatasetConfig& s) {
  return {{"styles", s.styles}, {"contents", s.contents}, {"clips_per_pair", s.clips_per_pair},
          {"length", s.length}, {"fps", s.fps},           {"seed", s.seed}};
}

io::SynthDatasetConfig synth_from_json(const json& j) {
  io::SynthDatasetConfig s;
  s.styles = j.value("styles", s.styles);
  s.contents = j.value("contents", s.contents);
  s.clips_per_pair = j.value("clips_per_pair", s.clips_per_pair);
  s.length = j.value("length", s.length);
  s.fps = j.value("fps", s.fps);
  s.seed = j.value("seed", s.seed);
  return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("data")) {
    const json& d = j["data"];
    if (d.contains("clips")) {
      c.data.clips = d["clips"].get<std::string>();
    } else {
      c.data.synthetic = synth_from_json(d.value("synthetic", json::object()));
    }
    c.data.test_fraction = d.value("test_fraction", c.data.test_fraction);
    c.data.split_seed = d.value("split_seed", c.data.split_seed);
    c.data.window = d.value("window", c.data.window);
    c.data.overlap = d.value("overlap", c.data.overlap);
  } else {
    c.data.synthetic = io::SynthDatasetConfig{};
  }
  c.model = j.value("model", json::object());
  if (j.contains("train")) c.train = TrainConfig::from_json(j["train"]);
  if (j.contains("classifier")) {
    const json& k = j["classifier"];
    if (k.contains("checkpoint")) c.classifier_checkpoint = k["checkpoint"].get<std::string>();
    c.classifier.epochs = k.value("epochs", c.classifier.epochs);
    c.classifier.batch_size = k.value("batch_size", c.classifier.batch_size);
    c.classifier.lr = k.value("lr", c.classifier.lr);
    c.classifier.seed = k.value("seed", c.classifier.seed);
  }
  if (!(c.data.test_fraction >= 0.0 && c.data.test_fraction < 1.0)) {
    throw DomainError("data.test_fraction must lie in [0, 1)");
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json d = {{"test_fraction", data.test_fraction},
            {"split_seed", data.split_seed},
            {"window", data.window},
            {"overlap", data.overlap}};
  if (!data.clips.empty()) {
    d["clips"] = data.clips.string();
  } else {
    d["synthetic"] = synth_to_json(data.synthetic.value_or(io::SynthDatasetConfig{}));
  }
  json k = {{"epochs", classifier.epochs},
            {"batch_size", classifier.batch_size},
            {"lr", classifier.lr},
            {"seed", classifier.seed}};
  if (!classifier_checkpoint.empty()) k["checkpoint"] = classifier_checkpoint.string();
  return {{"data", d}, {"model", model}, {"train", train.to_json()}, {"classifier", k}};
}

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData p;
  std::vector<io::MotionClip> clips;
  if (!config.data.clips.empty()) {
    clips = io::load_clips(config.data.clips);
  } else {
    const io::SynthDatasetConfig s = config.data.synthetic.value_or(io::SynthDatasetConfig{});
    clips = io::make_synthetic_dataset(s);
    json styles = json::array();
    for (int i = 0; i < s.styles; ++i) styles.push_back(io::synth_style_name(i));
    p.label_names["style"] = styles;
    json contents = json::array();
    for (int i = 0; i < s.contents; ++i) contents.push_back(i == 0 ? "walk" : "jump");
    p.label_names["content"] = contents;
  }
  if (clips.empty()) throw CoverageError("no training clips");

  json m = config.model;
  if (!m.contains("skeleton")) m["skeleton"] = model::skeleton_to_json(clips.front().skeleton);
  int styles = 0;
  int contents = 0;
  for (const auto& c : clips) {
    styles = std::max({styles, c.style.count, c.style.index + 1});
    contents = std::max({contents, c.content.count, c.content.index + 1});
  }
  if (!m.contains("styles")) m["styles"] = styles;
  if (!m.contains("contents")) m["contents"] = contents;
  if (!m.contains("window")) m["window"] = config.data.window;
  p.model = model::ModelConfig::from_json(m);
  p.model.validate();

  for (auto& c : clips) {
    if (c.skeleton.joint_count() != p.model.joints()) {
      throw ShapeError("clip " + c.id + " has " + std::to_string(c.skeleton.joint_count()) +
                       " joints, model has " + std::to_string(p.model.joints()));
    }
    io::relabel_counts(c, p.model.styles, p.model.contents);
    if (std::fabs(c.fps - p.model.fps) > 1e-6 * p.model.fps) c = io::downsample(c, p.model.fps);
  }
  auto [train_clips, test_clips] = io::split_dataset(clips, config.data.test_fraction, config.data.split_seed);
  p.train = io::window_clips(train_clips, p.model.window, config.data.overlap).windows;
  p.test = io::window_clips(test_clips, p.model.window, config.data.overlap).windows;
  p.train_clips = std::move(train_clips);
  p.test_clips = std::move(test_clips);
  if (p.train.empty()) throw CoverageError("no training windows (clips shorter than the window?)");
  return p;
}

}  // namespace style_erd::train
