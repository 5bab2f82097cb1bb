#include "commands.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>

using namespace style_erd::cli;

int main(int argc, char** argv) {
  CLI::App app("Online motion style transfer: data, training, transfer, streaming and evaluation");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-data", "Write a synthetic labelled gait dataset");
  s->add_option("--out", synth.out, "Clip cache to write")->required();
  s->add_option("--config", synth.config, "JSON with styles/contents/clips_per_pair/length/fps/seed")
      ->check(CLI::ExistingFile);
  s->add_option("--bvh-dir", synth.bvh_dir, "Also write one BVH per clip plus labels.json here");
  s->add_option("--seed", synth.seed);
  s->add_option("--styles", synth.styles);
  s->add_option("--contents", synth.contents);
  s->add_option("--clips-per-pair", synth.clips_per_pair);
  s->add_option("--length", synth.length, "Frames per clip");
  s->add_option("--fps", synth.fps);

  TrainArgs tr;
  auto add_train_flags = [](CLI::App* c, TrainArgs& t) {
    c->add_option("--config", t.config, "Experiment JSON (data, model, train, classifier)")
        ->check(CLI::ExistingFile);
    c->add_option("--in", t.in, "Clips (cache, .bvh or directory); overrides the config's data");
    c->add_option("--seed", t.seed);
    c->add_option("--epochs", t.epochs);
  };
  auto* p = app.add_subcommand("pretrain-classifier", "Train the frozen content classifier");
  add_train_flags(p, tr);
  p->add_option("--out", tr.out, "Classifier checkpoint")->required();

  TrainArgs tg;
  auto* t = app.add_subcommand("train", "Adversarial training of generator and discriminator");
  add_train_flags(t, tg);
  t->add_option("--out", tg.out, "Model checkpoint")->capture_default_str();
  t->add_option("--classifier", tg.classifier, "Pretrained classifier checkpoint")->check(CLI::ExistingFile);
  t->add_option("--log", tg.log, "Per-epoch NDJSON loss log (default: stdout)");
  t->add_flag("--no-adv", tg.no_adv, "Ablation: drop the adversarial term");
  t->add_flag("--no-per", tg.no_per, "Ablation: drop the perceptual term");
  t->add_flag("--no-attention", tg.no_attention, "Ablation: critic without attention");
  t->add_flag("--zero-init-states", tg.zero_init_states, "Ablation: zero recurrent initial states");

  TransferArgs x;
  auto* f = app.add_subcommand("transfer", "Stylize a BVH file or cached clip");
  f->add_option("--checkpoint", x.checkpoint)->required()->check(CLI::ExistingFile);
  f->add_option("--in", x.in, "Input .bvh or clip cache")->required()->check(CLI::ExistingFile);
  f->add_option("--out", x.out, "Output .bvh (a .json sidecar is written next to it)")->required();
  f->add_option("--clip", x.clip, "Clip id inside a cache (default: first)");
  f->add_option("--source-style", x.source_style, "Style label of the input")->capture_default_str();
  f->add_option("--content", x.content, "Content label of the input")->capture_default_str();
  f->add_option("--target-style", x.target_style, "")->capture_default_str();
  f->add_option("--second-style", x.second_style, "Blend partner; alpha weighs the target against it");
  f->add_option("--alpha", x.alpha, "")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  f->add_option("--fps", x.fps, "Processing rate (default: the model's)");

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "Stream frames in, stylized frames out");
  v->add_option("--checkpoint", sv.checkpoint)->required()->check(CLI::ExistingFile);
  v->add_option("--transport", sv.transport, "stdio, tcp or ws (default stdio; ws with --ui)")
      ->check(CLI::IsMember({"stdio", "tcp", "ws"}));
  v->add_option("--host", sv.host, "")->capture_default_str();
  v->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  v->add_option("--ui", sv.ui, "Static UI bundle served next to the WebSocket endpoint")
      ->check(CLI::ExistingDirectory);
  v->add_option("--stats-every", sv.stats_every, "Frames per stats message; 0 disables")->capture_default_str();

  BenchArgs b;
  auto* n = app.add_subcommand("bench", "Per-frame latency of the streaming model");
  n->add_option("--checkpoint", b.checkpoint)->check(CLI::ExistingFile);
  n->add_option("--config", b.config, "Model JSON for an untrained model (default size)")
      ->check(CLI::ExistingFile);
  n->add_option("--frames", b.frames, "")->capture_default_str()->check(CLI::PositiveNumber);
  n->add_option("--seed", b.seed, "")->capture_default_str();
  n->add_option("--target-style", b.target_style);
  n->add_option("--out", b.out, "Also write the report (with the series) here");

  FmdArgs e;
  auto* m = app.add_subcommand("eval-fmd", "Frechet motion distance between two clip sets");
  m->add_option("--set-a", e.set_a)->required()->check(CLI::ExistingPath);
  m->add_option("--set-b", e.set_b)->required()->check(CLI::ExistingPath);
  m->add_option("--extractor", e.extractor, "Feature extractor checkpoint (default: train on both sets)")
      ->check(CLI::ExistingFile);
  m->add_option("--save-extractor", e.save_extractor);
  m->add_option("--epochs", e.epochs, "Extractor training epochs");
  m->add_option("--seed", e.seed, "")->capture_default_str();
  m->add_option("--fps", e.fps, "Rate both sets are brought to")->capture_default_str();
  m->add_option("--out", e.out, "Also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  }

  try {
    if (*s) return synth_data(synth);
    if (*p) return pretrain_classifier(tr);
    if (*t) return train(tg);
    if (*f) return transfer(x);
    if (*v) return serve(sv);
    if (*n) return bench(b);
    if (*m) return eval_fmd(e);
  } catch (const std::exception& err) {
    std::cerr << "style_erd: " << err.what() << '\n';
    return 1;
  }
  return 1;
}
