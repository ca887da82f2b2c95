#include "mdta2g/sampling.hpp"

#include "mdta2g/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace mdta2g {

std::string to_string(SamplerMode mode) { return mode == SamplerMode::Full ? "full" : "accel"; }

SamplerMode sampler_mode_from_string(const std::string& text) {
  if (text == "full") return SamplerMode::Full;
  if (text == "accel" || text == "accelerated") return SamplerMode::Accelerated;
  throw ConfigError("mode must be full or accel, got '" + text + "'");
}

void SamplerConfig::validate() const {
  if (!(scale >= 1.0) || !std::isfinite(scale)) throw ConfigError("scale must be >= 1");
  if (mode == SamplerMode::Accelerated && skip < 1) throw ConfigError("N must be >= 1 in accelerated mode");
}

std::string SamplerConfig::label() const {
  return mode == SamplerMode::Full ? "full" : "1:" + std::to_string(skip);
}

std::vector<int> anchor_steps(int steps, int skip) {
  if (steps < 1) throw std::invalid_argument("anchor_steps: steps must be >= 1");
  if (skip < 0) throw std::invalid_argument("anchor_steps: skip must be >= 0");
  std::vector<int> out;
  for (int t = steps; t >= 1; t -= skip + 1) out.push_back(t);
  return out;
}

int expected_eval_count(int steps, int skip) { return (steps + skip) / (skip + 1); }

Mat sas_refresh(const Mat& x_t_hat, const Mat& x0_hat_t, int t, double scale, const Schedule& schedule) {
  if (t < 1 || t > schedule.steps) throw std::out_of_range("sas_refresh: t outside [1, T]");
  if (!(scale >= 1.0)) throw std::invalid_argument("sas_refresh: scale must be >= 1");
  const double ab = schedule.alpha_bar_at(t);
  if (!(ab < 1.0)) throw std::invalid_argument("sas_refresh: alpha_bar_t == 1");
  const double sa = std::sqrt(ab);
  const double sn = std::sqrt(1.0 - ab);
  const Mat eps_hat = (x_t_hat - sa * x0_hat_t) / sn;
  return (x_t_hat - (sn / scale) * eps_hat) / sa;
}

namespace {

void check_finite(const Mat& m, int t, const char* what) {
  if (!m.allFinite()) {
    throw std::runtime_error(std::string("sampling: non-finite ") + what + " at step " + std::to_string(t));
  }
}

SampleResult run_plan(const Denoiser& denoiser, Eigen::Index frames, Eigen::Index width,
                      const ConditionBundle& bundle, const Schedule& schedule, int skip, double scale, Rng& rng) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  SampleResult res;
  res.trace.x0_norms.reserve(static_cast<std::size_t>(schedule.steps));
  Mat x = gaussian_like(frames, width, rng);
  Mat x0;
  int until_anchor = 0;
  for (int t = schedule.steps; t >= 1; --t) {
    if (until_anchor == 0) {
      x0 = predict_x0(denoiser, x, t, bundle);
      ++res.trace.network_eval_count;
      until_anchor = skip;
      check_finite(x0, t, "x0_hat");
    } else {
      x0 = sas_refresh(x, x0, t, scale, schedule);
      --until_anchor;
    }
    res.trace.x0_norms.push_back(x0.norm());
    x = posterior_step(x, x0, t, schedule, rng);
    check_finite(x, t, "x_t");
  }
  res.x0 = std::move(x);
  res.trace.wall_time_s = std::chrono::duration<double>(clock::now() - start).count();
  return res;
}

}  // namespace

SampleResult sample_full(const Denoiser& denoiser, Eigen::Index frames, Eigen::Index width,
                         const ConditionBundle& bundle, const Schedule& schedule, Rng& rng) {
  return run_plan(denoiser, frames, width, bundle, schedule, 0, 1.0, rng);
}

SampleResult sample_accelerated(const Denoiser& denoiser, Eigen::Index frames, Eigen::Index width,
                                const ConditionBundle& bundle, const Schedule& schedule,
                                const SamplerConfig& cfg, Rng& rng) {
  if (cfg.mode != SamplerMode::Accelerated) throw ConfigError("sample_accelerated requires mode=accel");
  cfg.validate();
  return run_plan(denoiser, frames, width, bundle, schedule, cfg.skip, cfg.scale, rng);
}

SampleResult sample(const Denoiser& denoiser, Eigen::Index frames, Eigen::Index width, const ConditionBundle& bundle,
                    const Schedule& schedule, const SamplerConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  if (cfg.mode == SamplerMode::Full) return sample_full(denoiser, frames, width, bundle, schedule, rng);
  return sample_accelerated(denoiser, frames, width, bundle, schedule, cfg, rng);
}

SampleResult sample(const MdtModel& model, Eigen::Index frames, const ConditionBundle& bundle,
                    const Schedule& schedule, const SamplerConfig& cfg) {
  return sample(make_denoiser(model), frames, model.config().fusion.dims.gesture_dim, bundle, schedule, cfg);
}

std::vector<BenchRow> bench_sampler(const Denoiser& denoiser, Eigen::Index frames, Eigen::Index width,
                                    const ConditionBundle& bundle, const Schedule& schedule,
                                    const std::vector<SamplerConfig>& configs, int runs,
                                    const SampleScorer& scorer) {
  if (configs.size() < 2) throw ConfigError("bench needs at least two sampler configs");
  if (std::none_of(configs.begin(), configs.end(), [](const auto& c) { return c.mode == SamplerMode::Full; })) {
    throw ConfigError("bench needs a full-mode config as the reference");
  }
  if (runs < 1) throw ConfigError("runs must be >= 1");
  std::vector<BenchRow> rows;
  for (const auto& cfg : configs) {
    cfg.validate();
    BenchRow row;
    row.label = cfg.label();
    row.config = cfg;
    row.runs = runs;
    std::vector<double> times;
    std::vector<Mat> outputs;
    for (int r = 0; r < runs; ++r) {
      SamplerConfig run_cfg = cfg;
      run_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
      SampleResult res = sample(denoiser, frames, width, bundle, schedule, run_cfg);
      row.eval_count = res.trace.network_eval_count;
      times.push_back(res.trace.wall_time_s);
      outputs.push_back(std::move(res.x0));
    }
    double sum = 0.0;
    for (double t : times) sum += t;
    row.mean_time_s = sum / runs;
    double var = 0.0;
    for (double t : times) var += (t - row.mean_time_s) * (t - row.mean_time_s);
    row.std_time_s = runs > 1 ? std::sqrt(var / (runs - 1)) : 0.0;
    std::sort(times.begin(), times.end());
    row.median_time_s = runs % 2 ? times[runs / 2] : 0.5 * (times[runs / 2 - 1] + times[runs / 2]);
    if (scorer) row.metrics = scorer(outputs);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mdta2g
