#include "style_erd/train/trainer.hpp"

#include "style_erd/errors.hpp"
#include "style_erd/nn/ops.hpp"
#include "style_erd/train/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <set>

namespace style_erd::train {

using nn::Tensor;
using nn::Var;

namespace {

template <typename F>
Var guarded(const char* term, F&& compute) {
  Var v;
  try {
    v = compute();
  } catch (const NumericError& e) {
    throw NumericError(std::string("non-finite ") + term + " (" + e.what() + ")");
  }
  for (double x : v.value().storage()) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + term);
  }
  return v;
}

std::vector<Var> guarded_grad(const char* term, const Var& loss, const nn::ParamStore& store) {
  try {
    return nn::grad(loss, std::span<const Var>(store.vars()));
  } catch (const NumericError& e) {
    throw NumericError(std::string("non-finite gradient of ") + term + " (" + e.what() + ")");
  }
}

// Channels-first view of t-major rows [T * N, C] as a plain tensor.
Tensor channels_first(const Tensor& rows, int sequences, int start, int width) {
  nn::NoGradGuard no_grad;
  const Var cols = nn::slice_cols(nn::constant(rows), start, width);
  const int steps = rows.dim(0) / sequences;
  return nn::permute3(nn::reshape(cols, {steps, sequences, width}), {1, 2, 0}).value();
}

struct Split {
  std::vector<const io::MotionWindow*> windows;
  std::vector<int> targets;
};

std::pair<Split, Split> split_tasks(const std::vector<TrainingTask>& tasks) {
  if (tasks.empty()) throw ContractError("empty task batch");
  Split rec;
  Split xfer;
  for (const TrainingTask& t : tasks) {
    Split& s = t.kind == TaskKind::reconstruction ? rec : xfer;
    s.windows.push_back(t.window);
    s.targets.push_back(t.target_style);
  }
  return {rec, xfer};
}

std::vector<int> contents_of(const std::vector<const io::MotionWindow*>& windows) {
  std::vector<int> out;
  for (const auto* w : windows) out.push_back(w->content.index);
  return out;
}

std::vector<int> styles_of(const std::vector<const io::MotionWindow*>& windows) {
  std::vector<int> out;
  for (const auto* w : windows) out.push_back(w->style.index);
  return out;
}

// Clears requires_grad on a store for a scope.
class FreezeScope {
 public:
  explicit FreezeScope(nn::ParamStore& store) : store_(store), was_(store.trainable()) {
    store_.set_trainable(false);
  }
  ~FreezeScope() { store_.set_trainable(was_); }
  FreezeScope(const FreezeScope&) = delete;
  FreezeScope& operator=(const FreezeScope&) = delete;

 private:
  nn::ParamStore& store_;
  bool was_;
};

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

void LossWeights::validate() const {
  if (!(adv >= 0.0 && per >= 0.0 && gp >= 0.0)) throw DomainError("loss weights must be >= 0");
}

void TrainConfig::validate() const {
  if (epochs < 0) throw DomainError("epochs must be >= 0");
  if (batch_size < 1) throw DomainError("batch_size must be positive");
  if (!(lr_gen > 0.0 && lr_dis > 0.0)) throw DomainError("learning rates must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw DomainError("Adam betas must lie in [0, 1)");
  }
  weights.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"lr_gen", lr_gen},
          {"lr_dis", lr_dis},
          {"beta1", beta1},
          {"beta2", beta2},
          {"clip_norm", clip_norm},
          {"seed", seed},
          {"weights", {{"adv", weights.adv}, {"per", weights.per}, {"gp", weights.gp}}},
          {"no_adv", no_adv},
          {"no_per", no_per},
          {"no_attention", no_attention},
          {"zero_init_states", zero_init_states}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr_gen = j.value("lr_gen", c.lr_gen);
  c.lr_dis = j.value("lr_dis", c.lr_dis);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.seed = j.value("seed", c.seed);
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    c.weights.adv = w.value("adv", c.weights.adv);
    c.weights.per = w.value("per", c.weights.per);
    c.weights.gp = w.value("gp", c.weights.gp);
  }
  c.no_adv = j.value("no_adv", c.no_adv);
  c.no_per = j.value("no_per", c.no_per);
  c.no_attention = j.value("no_attention", c.no_attention);
  c.zero_init_states = j.value("zero_init_states", c.zero_init_states);
  c.validate();
  return c;
}

model::ModelConfig TrainConfig::apply_ablations(model::ModelConfig config) const {
  if (no_attention) config.attention = false;
  if (zero_init_states) config.zero_init_states = true;
  return config;
}

std::vector<std::vector<TrainingTask>> sample_tasks(const std::vector<io::MotionWindow>& windows,
                                                    int batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw DomainError("batch_size must be positive");
  bool neutral = false;
  bool styled = false;
  for (const auto& w : windows) {
    (w.style.index == kNeutralStyle ? neutral : styled) = true;
  }
  if (!neutral) throw ProtocolError("task sampling needs neutral windows");
  if (!styled) throw ProtocolError("task sampling needs windows of a non-neutral style");
  std::mt19937_64 rng(seed);
  std::vector<TrainingTask> tasks;
  tasks.reserve(2 * windows.size());
  for (const auto& w : windows) {
    tasks.push_back({&w, w.style.index, TaskKind::reconstruction});
    int target = kNeutralStyle;
    if (w.style.index == kNeutralStyle) {
      if (w.style.count < 2) throw ProtocolError("window label set has no non-neutral style");
      target = std::uniform_int_distribution<int>(1, w.style.count - 1)(rng);
    }
    tasks.push_back({&w, target, TaskKind::transfer});
  }
  std::shuffle(tasks.begin(), tasks.end(), rng);
  std::vector<std::vector<TrainingTask>> batches;
  for (std::size_t i = 0; i < tasks.size(); i += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(tasks.size(), i + static_cast<std::size_t>(batch_size));
    batches.emplace_back(tasks.begin() + static_cast<std::ptrdiff_t>(i),
                         tasks.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

nlohmann::json LossBundle::to_json(int epoch) const {
  return {{"epoch", epoch}, {"L_rec", rec}, {"L_adv", adv}, {"L_per", per}, {"L_cri", cri},
          {"L_gp", gp},     {"L_gen", gen}, {"L_dis", dis}};
}

model::SequenceBatch window_batch(const std::vector<const io::MotionWindow*>& windows,
                                  const std::vector<int>& targets) {
  if (windows.empty()) throw ContractError("window_batch: no windows");
  if (targets.size() != windows.size()) throw ShapeError("window_batch: target count");
  std::vector<const std::vector<MotionFrame>*> frames;
  for (const auto* w : windows) frames.push_back(&w->frames);
  model::SequenceBatch b;
  b.features = model::pack_features(frames);
  b.source_styles = styles_of(windows);
  b.contents = contents_of(windows);
  b.target_styles = targets;
  b.sequences = static_cast<int>(windows.size());
  b.steps = windows.front()->length();
  return b;
}

Tensor window_content_input(const std::vector<const io::MotionWindow*>& windows) {
  std::vector<const std::vector<MotionFrame>*> frames;
  for (const auto* w : windows) frames.push_back(&w->frames);
  const Tensor rows = model::pack_features(frames);
  return channels_first(rows, static_cast<int>(windows.size()), 0, rows.dim(1));
}

Tensor window_style_input(const std::vector<const io::MotionWindow*>& windows) {
  std::vector<const std::vector<MotionFrame>*> frames;
  for (const auto* w : windows) frames.push_back(&w->frames);
  const Tensor rows = model::pack_features(frames);
  const int j = rows.dim(1) / 10;
  return channels_first(rows, static_cast<int>(windows.size()), 4 * j, 6 * j);
}

Var generator_loss(const Networks& nets, const std::vector<TrainingTask>& tasks,
                   const LossWeights& weights, TermFlags flags, LossBundle& bundle,
                   const model::SequenceOutput* transfer_out) {
  const auto [rec, xfer] = split_tasks(tasks);
  const int j = nets.gen.config().joints();
  Var total = nn::constant(Tensor::scalar(0.0));
  bundle.rec = bundle.adv = bundle.per = 0.0;

  if (!rec.windows.empty()) {
    const Var l = guarded("L_rec", [&] {
      const model::SequenceBatch batch = window_batch(rec.windows, rec.targets);
      const model::SequenceOutput out = model::run_sequences(nets.gen, batch);
      const Var real = nn::constant(batch.features);
      const Var sum = loss_rec(out.motion.rotations, out.motion.positions, out.motion.velocities,
                               nn::slice_cols(real, 0, 4 * j), nn::slice_cols(real, 4 * j, 3 * j),
                               nn::slice_cols(real, 7 * j, 3 * j));
      return nn::scale(sum, 1.0 / batch.sequences);
    });
    bundle.rec = l.value().item();
    total = l;
  }

  const bool per = flags.per && nets.classifier != nullptr;
  if (!xfer.windows.empty() && (flags.adv || per)) {
    const model::SequenceBatch batch = window_batch(xfer.windows, xfer.targets);
    const model::SequenceOutput out =
        transfer_out ? *transfer_out : model::run_sequences(nets.gen, batch);
    const int n = batch.sequences;
    if (flags.adv) {
      const Var l = guarded("L_adv", [&] {
        const Var x = model::style_input(out.motion.positions, out.motion.velocities, n);
        return loss_adv(nets.dis.discriminate(x, batch.target_styles, batch.contents));
      });
      bundle.adv = l.value().item();
      total = nn::add(total, nn::scale(l, weights.adv));
    }
    if (per) {
      const Var l = guarded("L_per", [&] {
        Tensor phi;
        {
          nn::NoGradGuard no_grad;
          phi = nets.classifier->content_features(nn::constant(window_content_input(xfer.windows)))
                    .value();
        }
        const Var x = model::content_input(out.motion.rotations, out.motion.positions,
                                           out.motion.velocities, n);
        return loss_per(nn::constant(phi), nets.classifier->content_features(x));
      });
      bundle.per = l.value().item();
      total = nn::add(total, nn::scale(l, weights.per));
    }
  }
  bundle.gen = total.value().item();
  return total;
}

Var discriminator_loss(const Networks& nets, const std::vector<TrainingTask>& tasks,
                       const LossWeights& weights, LossBundle& bundle,
                       const model::SequenceOutput* transfer_out) {
  const auto [rec, xfer] = split_tasks(tasks);
  std::vector<const io::MotionWindow*> real_windows = rec.windows;
  real_windows.insert(real_windows.end(), xfer.windows.begin(), xfer.windows.end());

  const Var real(window_style_input(real_windows), true);
  const Var real_scores = guarded("L_cri", [&] {
    return nets.dis.discriminate(real, styles_of(real_windows), contents_of(real_windows));
  });
  const Var cri = guarded("L_cri", [&] {
    if (xfer.windows.empty()) {
      const Var r = nn::add_scalar(real_scores, -1.0);
      return nn::mean(nn::mul(r, r));
    }
    const model::SequenceBatch batch = window_batch(xfer.windows, xfer.targets);
    Tensor fake;
    {
      nn::NoGradGuard no_grad;
      const model::SequenceOutput out =
          transfer_out ? *transfer_out : model::run_sequences(nets.gen, batch);
      fake = model::style_input(out.motion.positions, out.motion.velocities, batch.sequences).value();
    }
    const Var fake_scores = nets.dis.discriminate(nn::constant(fake), batch.target_styles, batch.contents);
    return loss_cri(real_scores, fake_scores);
  });
  const Var gp = guarded("L_gp", [&] { return loss_gp_from_scores(real_scores, real); });
  bundle.cri = cri.value().item();
  bundle.gp = gp.value().item();
  const Var total = nn::add(cri, nn::scale(gp, weights.gp));
  bundle.dis = total.value().item();
  return total;
}

Trainer::Trainer(const model::ModelConfig& model, TrainConfig config,
                 const model::ContentClassifier* classifier)
    : config_(std::move(config)),
      classifier_(classifier),
      gen_opt_({config_.lr_gen, config_.beta1, config_.beta2, 1e-8, config_.clip_norm}),
      dis_opt_({config_.lr_dis, config_.beta1, config_.beta2, 1e-8, config_.clip_norm}) {
  config_.validate();
  if (!config_.no_per && classifier_ == nullptr) {
    throw ContractError("training with the perceptual loss needs a pretrained classifier");
  }
  const model::ModelConfig cfg = config_.apply_ablations(model);
  gen_ = std::make_unique<model::Generator>(cfg, config_.seed);
  dis_ = std::make_unique<model::Discriminator>(cfg, config_.seed + 1);
}

LossBundle Trainer::run_epoch(const std::vector<io::MotionWindow>& windows, int epoch) {
  const auto batches = sample_tasks(windows, config_.batch_size, epoch_seed(config_.seed, epoch));
  const Networks nets{*gen_, *dis_, config_.no_per ? nullptr : classifier_};
  const TermFlags flags{!config_.no_adv, !config_.no_per};
  LossBundle mean;
  for (const auto& tasks : batches) {
    LossBundle b;
    // The generator is unchanged by the critic step, so one transfer forward
    // serves both updates.
    std::optional<model::SequenceOutput> xfer_out;
    const Split xfer = split_tasks(tasks).second;
    if (!xfer.windows.empty() && (flags.adv || flags.per)) {
      xfer_out = model::run_sequences(*gen_, window_batch(xfer.windows, xfer.targets));
    }
    const model::SequenceOutput* shared = xfer_out ? &*xfer_out : nullptr;
    if (!config_.no_adv) {
      const Var l = discriminator_loss(nets, tasks, config_.weights, b, shared);
      dis_opt_.step(dis_->params(), guarded_grad("L_dis", l, dis_->params()));
    }
    {
      FreezeScope frozen(dis_->params());
      const Var l = generator_loss(nets, tasks, config_.weights, flags, b, shared);
      gen_opt_.step(gen_->params(), guarded_grad("L_gen", l, gen_->params()));
    }
    mean.rec += b.rec;
    mean.adv += b.adv;
    mean.per += b.per;
    mean.cri += b.cri;
    mean.gp += b.gp;
    mean.gen += b.gen;
    mean.dis += b.dis;
  }
  const double n = static_cast<double>(batches.size());
  for (double* v : {&mean.rec, &mean.adv, &mean.per, &mean.cri, &mean.gp, &mean.gen, &mean.dis}) {
    *v /= n;
  }
  return mean;
}

std::vector<LossBundle> Trainer::fit(const std::vector<io::MotionWindow>& windows,
                                     std::ostream* log, const EpochCallback& on_epoch) {
  const std::uint64_t frozen = classifier_ ? classifier_->params().checksum() : 0;
  std::vector<LossBundle> history;
  for (int e = 0; e < config_.epochs; ++e) {
    history.push_back(run_epoch(windows, e));
    if (log) *log << history.back().to_json(e).dump() << '\n' << std::flush;
    if (on_epoch) on_epoch(e, history.back(), *gen_, *dis_);
  }
  if (classifier_ && classifier_->params().checksum() != frozen) {
    throw ContractError("classifier parameters changed during training");
  }
  return history;
}

model::ContentClassifier pretrain_classifier(const model::ModelConfig& config,
                                             const std::vector<io::MotionWindow>& windows,
                                             const ClassifierTraining& options) {
  std::set<int> seen;
  for (const auto& w : windows) seen.insert(w.content.index);
  for (int c = 0; c < config.contents; ++c) {
    if (!seen.count(c)) {
      throw CoverageError("classifier pretraining: no window of content " + std::to_string(c));
    }
  }
  model::ContentClassifier cls(config, options.seed);
  nn::Adam opt({options.lr});
  std::mt19937_64 rng(options.seed);
  std::vector<const io::MotionWindow*> order;
  for (const auto& w : windows) order.push_back(&w);
  for (int e = 0; e < options.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(options.batch_size)) {
      const auto end = std::min(order.size(), i + static_cast<std::size_t>(options.batch_size));
      const std::vector<const io::MotionWindow*> batch(order.begin() + static_cast<std::ptrdiff_t>(i),
                                                       order.begin() + static_cast<std::ptrdiff_t>(end));
      const Var loss = guarded("classifier cross-entropy", [&] {
        return nn::cross_entropy(cls.logits(nn::constant(window_content_input(batch))),
                                 contents_of(batch));
      });
      opt.step(cls.params(), guarded_grad("classifier cross-entropy", loss, cls.params()));
    }
  }
  cls.params().set_trainable(false);
  return cls;
}

double classifier_accuracy(const model::ContentClassifier& classifier,
                           const std::vector<io::MotionWindow>& windows) {
  if (windows.empty()) throw ContractError("classifier_accuracy: no windows");
  nn::NoGradGuard no_grad;
  int correct = 0;
  for (std::size_t i = 0; i < windows.size(); i += 64) {
    std::vector<const io::MotionWindow*> batch;
    for (std::size_t k = i; k < std::min(windows.size(), i + 64); ++k) batch.push_back(&windows[k]);
    const Tensor logits = classifier.logits(nn::constant(window_content_input(batch))).value();
    for (int r = 0; r < logits.dim(0); ++r) {
      int best = 0;
      for (int c = 1; c < logits.dim(1); ++c) {
        if (logits.at(r, c) > logits.at(r, best)) best = c;
      }
      correct += best == batch[r]->content.index;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(windows.size());
}

}  // namespace style_erd::train
