#pragma once

#include "mdta2g/gesture_data.hpp"
#include "mdta2g/rng.hpp"

#include <vector>

namespace mdta2g {

class FeatureExtractor;

struct GaussianMoments {
  Vec mean;
  Mat cov;  // unbiased (n - 1)
};
/// Rows of `features` are samples.
GaussianMoments fit_moments(const Mat& features);

/// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2}). The cross term is
/// tr sqrt(sqrt(S1) S2 sqrt(S1)); eigenvalues are clamped at zero.
double frechet_distance(const Vec& mu1, const Mat& cov1, const Vec& mu2, const Mat& cov2);

double fgd_from_features(const Mat& real_features, const Mat& gen_features);
/// Sets of flat gestures; every window of every sequence is one sample.
double fgd(const std::vector<Mat>& real_set, const std::vector<Mat>& gen_set, const FeatureExtractor& extractor);

/// Mean Euclidean distance over num_pairs uniformly drawn distinct row pairs.
/// num_pairs <= 0 averages over every pair exactly.
double diversity_from_features(const Mat& features, int num_pairs, Rng& rng);
double diversity(const std::vector<Mat>& gen_set, const FeatureExtractor& extractor, int num_pairs, Rng& rng);

/// Seconds; strictly increasing.
using BeatSequence = std::vector<double>;

/// Strict local minima of the moving-averaged mean angular speed.
BeatSequence extract_gesture_beats(const GestureSequence& seq, int smoothing_window = 5);

/// Mean over gesture beats of exp(-d^2 / (2 sigma^2)), d = distance to the
/// nearest audio beat. Zero when there are no gesture beats.
double beat_align(const BeatSequence& audio_beats, const BeatSequence& gesture_beats, double sigma = 0.1);

/// Weighted fraction of (frame, joint) rotations within `delta` radians of the
/// reference. Empty weights mean uniform weights; otherwise frames x joints.
double srgr(const GestureSequence& gen, const GestureSequence& gt, const Mat& weights = Mat(), double delta = 0.1);

struct MetricOptions {
  double beat_sigma = 0.1;
  double srgr_delta = 0.1;
  int smoothing_window = 5;
  int diversity_pairs = 1000;  // <= 0: every pair
  std::uint64_t seed = 0;
};

struct MetricReport {
  double fgd = 0.0;
  double diversity = 0.0;
  double beat_align = 0.0;
  double srgr = 0.0;
  std::uint64_t extractor_checksum = 0;
};

/// Four metrics of `gen` against `real`. Generated sequence i is paired with
/// real sequence i mod |real| for SRGR and scored against audio_beats[i] for
/// BeatAlign. Generated values are projected onto rotations first.
MetricReport evaluate_metrics(const std::vector<FlatGesture>& real, const std::vector<FlatGesture>& gen,
                              const std::vector<BeatSequence>& audio_beats, const FeatureExtractor& extractor,
                              const MetricOptions& opt = {});

}  // namespace mdta2g
