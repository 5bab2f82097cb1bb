#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace style_erd::cli {

struct SynthArgs {
  std::filesystem::path out;
  std::filesystem::path config;
  std::filesystem::path bvh_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> styles, contents, clips_per_pair, length;
  std::optional<double> fps;
};

struct TrainArgs {
  std::filesystem::path config;
  std::filesystem::path in;
  std::filesystem::path out = "style_erd_model.ckpt";
  std::filesystem::path classifier;
  std::filesystem::path log;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  bool no_adv = false, no_per = false, no_attention = false, zero_init_states = false;
};

struct TransferArgs {
  std::filesystem::path checkpoint, in, out;
  std::string clip;
  int source_style = 0, content = 0, target_style = 0;
  std::optional<int> second_style;
  double alpha = 1.0;
  std::optional<double> fps;
};

struct ServeArgs {
  std::filesystem::path checkpoint;
  std::string transport;
  std::string host = "127.0.0.1";
  unsigned short port = 0;
  std::filesystem::path ui;
  int stats_every = 1;
};

struct BenchArgs {
  std::filesystem::path checkpoint, config, out;
  int frames = 1000;
  std::uint64_t seed = 1;
  std::optional<int> target_style;
};

struct FmdArgs {
  std::filesystem::path set_a, set_b, extractor, save_extractor, out;
  std::optional<int> epochs;
  std::uint64_t seed = 1;
  double fps = 60.0;
};

int synth_data(const SynthArgs& a);
int pretrain_classifier(const TrainArgs& a);
int train(const TrainArgs& a);
int transfer(const TransferArgs& a);
int serve(const ServeArgs& a);
int bench(const BenchArgs& a);
int eval_fmd(const FmdArgs& a);

}  // namespace style_erd::cli
