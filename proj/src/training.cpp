#include "mdta2g/training.hpp"

#include "mdta2g/errors.hpp"

#include <cmath>

namespace mdta2g {

AdamW::AdamW(const ParameterStore& store, AdamWConfig config) : config_(config) {
  for (const auto& e : store.entries()) {
    names_.push_back(e.name);
    first_.push_back(Mat::Zero(e.var.rows(), e.var.cols()));
    second_.push_back(Mat::Zero(e.var.rows(), e.var.cols()));
  }
}

void AdamW::step(ParameterStore& store) {
  const auto& entries = store.entries();
  if (entries.size() != names_.size()) throw std::logic_error("AdamW: parameter store changed shape");
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double lr = config_.learning_rate;
  const double bias1 = 1.0 - std::pow(b1, steps_);
  const double bias2 = 1.0 - std::pow(b2, steps_);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    ad::Var p = entries[i].var;
    if (p.grad().size() == 0) continue;
    const Mat& g = p.grad();
    first_[i] = b1 * first_[i] + (1.0 - b1) * g;
    second_[i] = b2 * second_[i] + (1.0 - b2) * g.cwiseProduct(g);
    Mat& w = p.mutable_value();
    w *= 1.0 - lr * config_.weight_decay;
    w.array() -= lr * (first_[i].array() / bias1) / ((second_[i].array() / bias2).sqrt() + config_.eps);
  }
}

void AdamW::save(Checkpoint& ckpt) const {
  ckpt.meta["adam.steps"] = std::to_string(steps_);
  for (std::size_t i = 0; i < names_.size(); ++i) {
    ckpt.tensors.emplace_back("adam.m." + names_[i], first_[i]);
    ckpt.tensors.emplace_back("adam.v." + names_[i], second_[i]);
  }
}

void AdamW::load(const Checkpoint& ckpt) {
  steps_ = std::stoi(ckpt.meta.at("adam.steps"));
  for (std::size_t i = 0; i < names_.size(); ++i) {
    first_[i] = ckpt.tensor("adam.m." + names_[i]);
    second_[i] = ckpt.tensor("adam.v." + names_[i]);
  }
}

void TrainConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(optimizer.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(huber_delta > 0.0)) throw ConfigError("huber_delta must be positive");
  if (!(cond_dropout_p >= 0.0 && cond_dropout_p < 1.0)) throw ConfigError("cond_dropout_p must lie in [0, 1)");
  if (w_full < 0.0 || w_masked < 0.0 || !(w_full + w_masked > 0.0)) {
    throw ConfigError("loss_weights must be >= 0 with a positive sum");
  }
  if (curve_every < 1) throw ConfigError("curve_every must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

double huber_loss(const Mat& x0, const Mat& x0_hat, double delta) {
  if (x0.rows() != x0_hat.rows() || x0.cols() != x0_hat.cols()) throw std::invalid_argument("huber_loss: shape mismatch");
  ad::NoGradGuard guard;
  return ad::huber_mean(ad::constant(x0_hat), x0, delta).value()(0, 0);
}

SampleLoss sample_loss(const MdtModel& model, const Mat& x0, const ConditionBundle& cond, int t, const Mat& eps,
                       const MaskPlan& plan, const Schedule& schedule, const TrainConfig& cfg) {
  const Mat x_t = q_sample(x0, t, eps, schedule);
  ad::Var tokens = fused_tokens(model, x_t, t, cond);
  const InputMode mode = model.config().input_mode;
  SampleLoss out;
  std::optional<ad::Var> total;
  if (mode != InputMode::Unmasked) {
    out.full = ad::huber_mean(forward_full(model, tokens), x0, cfg.huber_delta);
    total = ad::scale(*out.full, cfg.w_full);
  }
  if (mode != InputMode::Full) {
    out.masked = ad::huber_mean(forward_masked(model, tokens, plan), x0, cfg.huber_delta);
    ad::Var weighted = ad::scale(*out.masked, cfg.w_masked);
    total = total ? ad::add(*total, weighted) : weighted;
  }
  out.total = *total;
  return out;
}

TrainState make_train_state(const MdtConfig& mdt_cfg, const TrainConfig& cfg) {
  cfg.validate();
  MdtModel model(mdt_cfg, derive_seed(cfg.seed, 0x6D6F64656CULL));
  AdamW opt(model.parameters(), cfg.optimizer);
  return TrainState{0, std::move(model), std::move(opt), {}};
}

LossRecord training_step(std::span<const TrainExample> batch, TrainState& state, const Schedule& schedule,
                         const TrainConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("training_step: empty batch");
  if (schedule.steps != state.model.config().fusion.max_timestep) {
    throw ConfigError("schedule length differs from the model's max_timestep");
  }
  const std::uint64_t step_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(state.step) + 1);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const auto& mcfg = state.model.config();
  state.model.parameters().zero_grad();

  double sum_full = 0.0, sum_masked = 0.0, sum_total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i];
    Rng rng(derive_seed(step_seed, i));
    const int t = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(schedule.steps)));
    const Mat eps = gaussian_like(ex.x0.rows(), ex.x0.cols(), rng);
    const ConditionBundle cond = condition_dropout(ex.conditions, cfg.cond_dropout_p, rng);
    const MaskPlan plan = sample_mask_plan(static_cast<int>(ex.x0.rows()), mcfg.rho_base, mcfg.wider, rng);

    SampleLoss loss = sample_loss(state.model, ex.x0, cond, t, eps, plan, schedule, cfg);
    const double full = loss.full ? loss.full->value()(0, 0) : 0.0;
    const double masked = loss.masked ? loss.masked->value()(0, 0) : 0.0;
    const double total = loss.total.value()(0, 0);
    if (!std::isfinite(total)) {
      throw TrainingError("non-finite loss at step " + std::to_string(state.step + 1) + " (sample " +
                          std::to_string(i) + ", t=" + std::to_string(t) + ", loss_full=" + std::to_string(full) +
                          ", loss_masked=" + std::to_string(masked) + ")");
    }
    loss.total.backward(inv_batch);
    sum_full += full;
    sum_masked += masked;
    sum_total += total;
  }
  state.optimizer.step(state.model.parameters());
  ++state.step;

  LossRecord rec;
  rec.step = state.step;
  if (mcfg.input_mode != InputMode::Unmasked) rec.loss_full = sum_full * inv_batch;
  if (mcfg.input_mode != InputMode::Full) rec.loss_masked = sum_masked * inv_batch;
  rec.combined = sum_total * inv_batch;
  return rec;
}

void train_until(TrainState& state, std::span<const TrainExample> dataset, const Schedule& schedule,
                 const TrainConfig& cfg, const StepObserver& observer) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("fit: empty dataset");
  const auto n = dataset.size();
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  std::vector<TrainExample> batch;
  while (state.step < cfg.steps) {
    batch.clear();
    if (batch_size >= n) {
      batch.assign(dataset.begin(), dataset.end());
    } else {
      Rng rng(derive_seed(cfg.seed ^ 0xBA7C4ULL, static_cast<std::uint64_t>(state.step)));
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      for (std::size_t i = 0; i < batch_size; ++i) {
        std::swap(idx[i], idx[i + rng.uniform_int(n - i)]);
        batch.push_back(dataset[idx[i]]);
      }
    }
    LossRecord rec = training_step(batch, state, schedule, cfg);
    if (state.step % cfg.curve_every == 0) state.curve.push_back(rec);
    if (cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0 && !cfg.checkpoint_dir.empty()) {
      std::filesystem::create_directories(cfg.checkpoint_dir);
      char name[32];
      std::snprintf(name, sizeof name, "step_%06d.ckpt", state.step);
      save_checkpoint(cfg.checkpoint_dir / name, train_state_checkpoint(state));
    }
    if (observer) observer(state, rec);
  }
}

FitResult fit(std::span<const TrainExample> dataset, const TrainConfig& cfg, const MdtConfig& mdt_cfg,
              const Schedule& schedule, const StepObserver& observer) {
  if (dataset.empty()) throw std::invalid_argument("fit: empty dataset");
  TrainState state = make_train_state(mdt_cfg, cfg);
  train_until(state, dataset, schedule, cfg, observer);
  return FitResult{std::move(state.model), std::move(state.curve)};
}

Checkpoint train_state_checkpoint(const TrainState& state) {
  Checkpoint ckpt = model_checkpoint(state.model);
  ckpt.meta["train.step"] = std::to_string(state.step);
  state.optimizer.save(ckpt);
  std::string curve;
  for (const auto& r : state.curve) {
    curve += std::to_string(r.step) + ":" + (r.loss_full ? format_double(*r.loss_full) : "") + ":" +
             (r.loss_masked ? format_double(*r.loss_masked) : "") + ":" + format_double(r.combined) + ";";
  }
  ckpt.meta["train.curve"] = curve;
  return ckpt;
}

TrainState train_state_from_checkpoint(const Checkpoint& ckpt, const TrainConfig& cfg) {
  MdtModel model = model_from_checkpoint(ckpt);
  AdamW opt(model.parameters(), cfg.optimizer);
  opt.load(ckpt);
  TrainState state{std::stoi(ckpt.meta.at("train.step")), std::move(model), std::move(opt), {}};
  auto it = ckpt.meta.find("train.curve");
  if (it != ckpt.meta.end()) {
    std::stringstream ss(it->second);
    std::string rec;
    while (std::getline(ss, rec, ';')) {
      if (rec.empty()) continue;
      std::vector<std::string> f;
      std::stringstream rs(rec);
      std::string part;
      while (std::getline(rs, part, ':')) f.push_back(part);
      while (f.size() < 4) f.emplace_back();
      LossRecord r;
      r.step = std::stoi(f[0]);
      if (!f[1].empty()) r.loss_full = std::stod(f[1]);
      if (!f[2].empty()) r.loss_masked = std::stod(f[2]);
      r.combined = std::stod(f[3]);
      state.curve.push_back(r);
    }
  }
  return state;
}

std::string loss_curve_csv(const std::vector<LossRecord>& curve) {
  std::string out = "step,loss_full,loss_masked\n";
  for (const auto& r : curve) {
    out += std::to_string(r.step) + "," + (r.loss_full ? format_double(*r.loss_full) : "") + "," +
           (r.loss_masked ? format_double(*r.loss_masked) : "") + "\n";
  }
  return out;
}

}  // namespace mdta2g
