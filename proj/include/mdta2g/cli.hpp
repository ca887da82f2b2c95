#pragma once

#include "mdta2g/feature_extractor.hpp"
#include "mdta2g/metrics.hpp"
#include "mdta2g/sampling.hpp"
#include "mdta2g/training.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mdta2g {

/// Per-field replacements applied on top of a named variant.
struct MdtOverrides {
  std::optional<int> encoder_depth;
  std::optional<int> decoder_depth;
  std::optional<int> si_blocks;
  std::optional<double> rho_base;
  std::optional<bool> wider;
  std::optional<bool> shortcut;
  std::optional<std::string> input_mode;

  void apply(MdtConfig& cfg) const;
};

/// Everything a subcommand needs after flag and config-file parsing.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::filesystem::path data_dir;
  std::filesystem::path checkpoint;
  std::filesystem::path out;

  // gen-data
  int n_sequences = 8;
  int frames = 60;
  std::string layout = "whole";
  SynthOptions synth;

  // model and training
  std::string variant = "XS";
  int max_timestep = 1000;
  MdtOverrides model;
  TrainConfig train;
  std::filesystem::path resume;

  // sampling and bench
  SamplerConfig sampler;
  std::vector<std::string> bench_modes{"full", "accel"};
  std::vector<int> bench_skips{20};
  int bench_runs = 5;
  int count = 0;  // 0: every dataset entry

  // evaluation
  std::filesystem::path real_dir;
  std::filesystem::path gen_dir;
  std::filesystem::path extractor;
  std::filesystem::path save_extractor;
  FeatureExtractorConfig fx;
  MetricOptions metrics;

  // ablate
  std::string axis = "all";
  std::vector<std::string> values;

  bool svg = false;
};

/// Exit codes: 0 success, 1 runtime failure, 2 bad flags or invalid configuration.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mdta2g
