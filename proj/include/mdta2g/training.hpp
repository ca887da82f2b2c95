#pragma once

#include "mdta2g/checkpoint.hpp"
#include "mdta2g/diffusion.hpp"
#include "mdta2g/mdt.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdta2g {

struct AdamWConfig {
  double learning_rate = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Decoupled weight decay: p <- p - lr*wd*p - lr*m_hat/(sqrt(v_hat)+eps).
class AdamW {
 public:
  AdamW(const ParameterStore& store, AdamWConfig config);

  /// Applies one update using the gradients accumulated in `store`.
  void step(ParameterStore& store);
  int steps_taken() const { return steps_; }
  const AdamWConfig& config() const { return config_; }

  void save(Checkpoint& ckpt) const;
  void load(const Checkpoint& ckpt);

 private:
  AdamWConfig config_;
  std::vector<std::string> names_;
  std::vector<Mat> first_;
  std::vector<Mat> second_;
  int steps_ = 0;
};

struct TrainConfig {
  int steps = 2000;
  int batch_size = 16;
  AdamWConfig optimizer;
  double huber_delta = 1.0;
  double cond_dropout_p = 0.1;
  double w_full = 1.0;
  double w_masked = 1.0;
  std::uint64_t seed = 0;
  int curve_every = 1;
  int checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

struct TrainExample {
  Mat x0;
  ConditionBundle conditions;
};

struct LossRecord {
  int step = 0;
  std::optional<double> loss_full;
  std::optional<double> loss_masked;
  double combined = 0.0;  // w_full * loss_full + w_masked * loss_masked
};

struct TrainState {
  int step = 0;
  MdtModel model;
  AdamW optimizer;
  std::vector<LossRecord> curve;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean smooth-L1 over elements: 0.5 e^2/delta for |e| <= delta, |e| - delta/2 beyond.
double huber_loss(const Mat& x0, const Mat& x0_hat, double delta);

/// Differentiable per-sample objective for fixed randomness. Either path may be
/// absent depending on the model's input mode.
struct SampleLoss {
  std::optional<ad::Var> full;
  std::optional<ad::Var> masked;
  ad::Var total;
};
SampleLoss sample_loss(const MdtModel& model, const Mat& x0, const ConditionBundle& cond, int t, const Mat& eps,
                       const MaskPlan& plan, const Schedule& schedule, const TrainConfig& cfg);

TrainState make_train_state(const MdtConfig& mdt_cfg, const TrainConfig& cfg);

/// One optimizer update over `batch`. Randomness is a pure function of
/// (cfg.seed, state.step, position in batch).
LossRecord training_step(std::span<const TrainExample> batch, TrainState& state, const Schedule& schedule,
                         const TrainConfig& cfg);

using StepObserver = std::function<void(const TrainState&, const LossRecord&)>;

/// Continues `state` until cfg.steps, selecting batches deterministically per step.
void train_until(TrainState& state, std::span<const TrainExample> dataset, const Schedule& schedule,
                 const TrainConfig& cfg, const StepObserver& observer = {});

struct FitResult {
  MdtModel model;
  std::vector<LossRecord> curve;
};
FitResult fit(std::span<const TrainExample> dataset, const TrainConfig& cfg, const MdtConfig& mdt_cfg,
              const Schedule& schedule, const StepObserver& observer = {});

Checkpoint train_state_checkpoint(const TrainState& state);
TrainState train_state_from_checkpoint(const Checkpoint& ckpt, const TrainConfig& cfg);

/// step,loss_full,loss_masked (absent paths left empty).
std::string loss_curve_csv(const std::vector<LossRecord>& curve);

}  // namespace mdta2g
