#pragma once

#include "mdta2g/diffusion.hpp"
#include "mdta2g/mdt.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace mdta2g {

enum class SamplerMode { Full, Accelerated };

std::string to_string(SamplerMode mode);
SamplerMode sampler_mode_from_string(const std::string& text);

struct SamplerConfig {
  SamplerMode mode = SamplerMode::Full;
  int skip = 20;          // N: network-free steps after each anchor
  double scale = 1.0005;  // >= 1
  std::uint64_t seed = 0;

  void validate() const;
  /// "full" or "1:N".
  std::string label() const;
};

struct SampleTrace {
  int network_eval_count = 0;
  double wall_time_s = 0.0;
  std::vector<double> x0_norms;  // Frobenius norm of x0_hat after every step, t = T..1
};

struct SampleResult {
  Mat x0;
  SampleTrace trace;
};

/// Steps (descending) at which the network runs: t = T, T-(N+1), ...
/// Size is ceil(T / (N+1)).
std::vector<int> anchor_steps(int steps, int skip);
int expected_eval_count(int steps, int skip);

/// x0 estimate implied by x_t_hat once the implied noise is shrunk by 1/scale.
Mat sas_refresh(const Mat& x_t_hat, const Mat& x0_hat_t, int t, double scale, const Schedule& schedule);

/// Ancestral sampling with one denoiser call per step.
SampleResult sample_full(const Denoiser& denoiser, Eigen::Index frames, Eigen::Index width,
                         const ConditionBundle& bundle, const Schedule& schedule, Rng& rng);

/// 1:N sampling: anchors call the denoiser, skip steps refresh x0_hat without it.
SampleResult sample_accelerated(const Denoiser& denoiser, Eigen::Index frames, Eigen::Index width,
                                const ConditionBundle& bundle, const Schedule& schedule,
                                const SamplerConfig& cfg, Rng& rng);

/// Dispatches on cfg.mode with an rng seeded from cfg.seed.
SampleResult sample(const Denoiser& denoiser, Eigen::Index frames, Eigen::Index width, const ConditionBundle& bundle,
                    const Schedule& schedule, const SamplerConfig& cfg);
SampleResult sample(const MdtModel& model, Eigen::Index frames, const ConditionBundle& bundle,
                    const Schedule& schedule, const SamplerConfig& cfg);

struct BenchRow {
  std::string label;
  SamplerConfig config;
  int eval_count = 0;
  int runs = 0;
  double mean_time_s = 0.0;
  double std_time_s = 0.0;
  double median_time_s = 0.0;
  std::map<std::string, double> metrics;
};

/// Scores the samples generated by one config (one matrix per run).
using SampleScorer = std::function<std::map<std::string, double>(const std::vector<Mat>&)>;

/// Times every config over `runs` seeded runs (run r uses derive_seed(cfg.seed, r)).
std::vector<BenchRow> bench_sampler(const Denoiser& denoiser, Eigen::Index frames, Eigen::Index width,
                                    const ConditionBundle& bundle, const Schedule& schedule,
                                    const std::vector<SamplerConfig>& configs, int runs = 5,
                                    const SampleScorer& scorer = {});

}  // namespace mdta2g
