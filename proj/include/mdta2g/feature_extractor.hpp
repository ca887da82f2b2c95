#pragma once

// Window autoencoder used as the shared feature space for FGD and Diversity.
// Encoder: per-frame linear (D -> frame_hidden) + GELU, flatten the window,
// linear (W*frame_hidden -> mix_hidden) + GELU, linear (mix_hidden -> feature_dim).
// The decoder mirrors it. Inputs are standardized per column.

#include "mdta2g/checkpoint.hpp"
#include "mdta2g/params.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mdta2g {

struct FeatureExtractorConfig {
  int window = 30;
  int stride = 1;
  int frame_hidden = 32;
  int mix_hidden = 128;
  int feature_dim = 64;
  int steps = 400;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double loss_threshold = 0.1;  // standardized reconstruction MSE
  std::uint64_t seed = 0;

  void validate() const;
};

class FeatureExtractor {
 public:
  FeatureExtractor(const FeatureExtractorConfig& cfg, int input_width);
  FeatureExtractor(FeatureExtractor&&) = default;
  FeatureExtractor& operator=(FeatureExtractor&&) = default;

  const FeatureExtractorConfig& config() const { return cfg_; }
  int input_width() const { return input_width_; }
  int feature_dim() const { return cfg_.feature_dim; }

  /// Rows are windows (window x input_width), stacked: (B*window) x input_width.
  ad::Var encode(const ad::Var& stacked_windows) const;
  ad::Var decode(const ad::Var& features) const;

  /// Every stride-spaced window of every sequence, one feature row per window.
  Mat features(const std::vector<Mat>& sequences) const;
  Mat features(const Mat& sequence) const;

  /// Windows of the sequences stacked and standardized.
  Mat standardized_windows(const std::vector<Mat>& sequences, int* count = nullptr) const;
  double reconstruction_mse(const std::vector<Mat>& sequences) const;

  std::uint64_t checksum() const;
  double final_loss() const { return final_loss_; }
  const std::string& warning() const { return warning_; }

  Checkpoint to_checkpoint() const;
  static FeatureExtractor from_checkpoint(const Checkpoint& ckpt);

  ParameterStore& parameters() { return store_; }
  Vec& column_mean() { return mean_; }
  Vec& column_std() { return std_; }

 private:
  friend FeatureExtractor train_feature_extractor(const std::vector<Mat>&, const FeatureExtractorConfig&);

  FeatureExtractorConfig cfg_;
  int input_width_ = 0;
  ParameterStore store_;
  Linear frame_in_, mix_in_, bottleneck_, expand_, mix_out_, frame_out_;
  Vec mean_;
  Vec std_;
  double final_loss_ = 0.0;
  std::string warning_;
};

/// Number of stride-spaced windows in a sequence of `frames` rows.
int window_count(int frames, int window, int stride);

/// Fits the standardization and trains the autoencoder on every window. If
/// the final loss misses cfg.loss_threshold the extractor is still returned
/// with warning() set.
FeatureExtractor train_feature_extractor(const std::vector<Mat>& sequences, const FeatureExtractorConfig& cfg);

}  // namespace mdta2g
