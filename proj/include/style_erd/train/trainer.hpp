#pragma once

#include "style_erd/io/dataset.hpp"
#include "style_erd/model/classifier.hpp"
#include "style_erd/model/discriminator.hpp"
#include "style_erd/model/generator.hpp"
#include "style_erd/nn/optim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <vector>

namespace style_erd::train {

struct LossWeights {
  double adv = 1.0;
  double per = 0.1;
  double gp = 128.0;

  void validate() const;
};

struct TrainConfig {
  int epochs = 2000;
  int batch_size = 16;
  double lr_gen = 1e-4;
  double lr_dis = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double clip_norm = 0.0;  // <= 0 disables global-norm clipping
  std::uint64_t seed = 1;
  LossWeights weights;
  bool no_adv = false;
  bool no_per = false;
  bool no_attention = false;
  bool zero_init_states = false;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  // The model architecture with the ablation switches applied.
  model::ModelConfig apply_ablations(model::ModelConfig config) const;
};

enum class TaskKind { reconstruction, transfer };

struct TrainingTask {
  const io::MotionWindow* window = nullptr;
  int target_style = 0;
  TaskKind kind = TaskKind::reconstruction;
};

// One reconstruction and one transfer task per window (neutral windows go to
// a uniformly drawn non-neutral style, styled windows to neutral), shuffled
// and cut into batches. Throws ProtocolError without neutral windows or
// without any styled window.
std::vector<std::vector<TrainingTask>> sample_tasks(const std::vector<io::MotionWindow>& windows,
                                                    int batch_size, std::uint64_t seed);

struct LossBundle {
  double rec = 0.0;
  double adv = 0.0;
  double per = 0.0;
  double cri = 0.0;
  double gp = 0.0;
  double gen = 0.0;
  double dis = 0.0;

  nlohmann::json to_json(int epoch) const;
};

struct Networks {
  const model::Generator& gen;
  const model::Discriminator& dis;
  const model::ContentClassifier* classifier;  // null with no_per
};

struct TermFlags {
  bool adv = true;
  bool per = true;
};

// L_gen = L_rec + w_adv L_adv + w_per L_per. L_rec sums frame losses over the
// window and averages over reconstruction tasks; L_adv and L_per average over
// transfer tasks. Fills the generator fields of `bundle`. `transfer_out`, when
// given, is the generator's output for the transfer tasks in task order.
nn::Var generator_loss(const Networks& nets, const std::vector<TrainingTask>& tasks,
                       const LossWeights& weights, TermFlags flags, LossBundle& bundle,
                       const model::SequenceOutput* transfer_out = nullptr);
// L_dis = L_cri + w_gp L_gp, real samples are the batch's windows under their
// own labels, fakes the transfer outputs under target labels (treated as
// constants). Fills the discriminator fields of `bundle`.
nn::Var discriminator_loss(const Networks& nets, const std::vector<TrainingTask>& tasks,
                           const LossWeights& weights, LossBundle& bundle,
                           const model::SequenceOutput* transfer_out = nullptr);

// Per-epoch hook; receives the epoch's mean losses and the live networks.
using EpochCallback = std::function<void(int epoch, const LossBundle&, const model::Generator&,
                                         const model::Discriminator&)>;

class Trainer {
 public:
  // The classifier must outlive the trainer; it is frozen during training.
  Trainer(const model::ModelConfig& model, TrainConfig config,
          const model::ContentClassifier* classifier);

  // One pass over the tasks sampled for `epoch`; returns mean losses.
  LossBundle run_epoch(const std::vector<io::MotionWindow>& windows, int epoch);
  // Runs config.epochs epochs, writing one NDJSON record per epoch to `log`.
  std::vector<LossBundle> fit(const std::vector<io::MotionWindow>& windows, std::ostream* log,
                              const EpochCallback& on_epoch = {});

  model::Generator& generator() noexcept { return *gen_; }
  model::Discriminator& discriminator() noexcept { return *dis_; }
  const TrainConfig& config() const noexcept { return config_; }

 private:
  TrainConfig config_;
  std::unique_ptr<model::Generator> gen_;
  std::unique_ptr<model::Discriminator> dis_;
  const model::ContentClassifier* classifier_;
  nn::Adam gen_opt_;
  nn::Adam dis_opt_;
};

// Batches of windows -> network inputs.
model::SequenceBatch window_batch(const std::vector<const io::MotionWindow*>& windows,
                                  const std::vector<int>& targets);

struct ClassifierTraining {
  int epochs = 50;
  int batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

// Cross-entropy training of the content classifier; returns it frozen.
// Throws CoverageError when a content class has no window.
model::ContentClassifier pretrain_classifier(const model::ModelConfig& config,
                                             const std::vector<io::MotionWindow>& windows,
                                             const ClassifierTraining& options);
double classifier_accuracy(const model::ContentClassifier& classifier,
                           const std::vector<io::MotionWindow>& windows);

// [N, 10J, T] classifier input and [N, 6J, T] critic input of real windows.
nn::Tensor window_content_input(const std::vector<const io::MotionWindow*>& windows);
nn::Tensor window_style_input(const std::vector<const io::MotionWindow*>& windows);

}  // namespace style_erd::train
