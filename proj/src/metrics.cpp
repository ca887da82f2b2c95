#include "mdta2g/metrics.hpp"

#include "mdta2g/feature_extractor.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mdta2g {

GaussianMoments fit_moments(const Mat& features) {
  if (features.rows() < 2) throw std::invalid_argument("fit_moments: need at least two samples");
  GaussianMoments m;
  m.mean = features.colwise().mean().transpose();
  const Mat centered = features.rowwise() - m.mean.transpose();
  m.cov = centered.transpose() * centered / static_cast<double>(features.rows() - 1);
  return m;
}

namespace {

void check_covariance(const Mat& cov, const char* name) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument(std::string(name) + " is not square");
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-6) throw std::invalid_argument(std::string(name) + " is not symmetric");
}

Mat psd_sqrt(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(0.5 * (sym + sym.transpose())));
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const Vec& mu1, const Mat& cov1, const Vec& mu2, const Mat& cov2) {
  check_covariance(cov1, "cov1");
  check_covariance(cov2, "cov2");
  const auto d = mu1.size();
  if (mu2.size() != d || cov1.rows() != d || cov2.rows() != d) {
    throw std::invalid_argument("frechet_distance: dimension mismatch");
  }
  const Mat s1 = psd_sqrt(cov1);
  const Mat inner = s1 * cov2 * s1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(0.5 * (inner + inner.transpose())),
                                                    Eigen::EigenvaluesOnly);
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu1 - mu2).squaredNorm() + cov1.trace() + cov2.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

double fgd_from_features(const Mat& real_features, const Mat& gen_features) {
  const auto need = real_features.cols() + 1;
  if (real_features.rows() < need || gen_features.rows() < need) {
    throw std::invalid_argument("fgd: each set needs at least " + std::to_string(need) + " feature samples (got " +
                                std::to_string(real_features.rows()) + " and " + std::to_string(gen_features.rows()) +
                                ")");
  }
  const GaussianMoments a = fit_moments(real_features);
  const GaussianMoments b = fit_moments(gen_features);
  return frechet_distance(a.mean, a.cov, b.mean, b.cov);
}

double fgd(const std::vector<Mat>& real_set, const std::vector<Mat>& gen_set, const FeatureExtractor& extractor) {
  return fgd_from_features(extractor.features(real_set), extractor.features(gen_set));
}

double diversity_from_features(const Mat& features, int num_pairs, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(features.rows());
  if (n < 2) throw std::invalid_argument("diversity: need at least two samples");
  double sum = 0.0;
  if (num_pairs <= 0) {
    std::uint64_t count = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      for (std::uint64_t j = i + 1; j < n; ++j) {
        sum += (features.row(static_cast<Eigen::Index>(i)) - features.row(static_cast<Eigen::Index>(j))).norm();
        ++count;
      }
    }
    return sum / static_cast<double>(count);
  }
  for (int p = 0; p < num_pairs; ++p) {
    const std::uint64_t i = rng.uniform_int(n);
    std::uint64_t j = rng.uniform_int(n - 1);
    if (j >= i) ++j;
    sum += (features.row(static_cast<Eigen::Index>(i)) - features.row(static_cast<Eigen::Index>(j))).norm();
  }
  return sum / num_pairs;
}

double diversity(const std::vector<Mat>& gen_set, const FeatureExtractor& extractor, int num_pairs, Rng& rng) {
  return diversity_from_features(extractor.features(gen_set), num_pairs, rng);
}

BeatSequence extract_gesture_beats(const GestureSequence& seq, int smoothing_window) {
  if (seq.frames() < 3) throw std::invalid_argument("extract_gesture_beats: need at least 3 frames");
  if (smoothing_window < 1) throw std::invalid_argument("extract_gesture_beats: smoothing_window must be >= 1");
  const std::vector<double> speed = mean_angular_speed(seq);
  const int n = static_cast<int>(speed.size());
  const int half = smoothing_window / 2;
  std::vector<double> smooth(speed.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + (smoothing_window - 1 - half));
    double s = 0.0;
    for (int k = lo; k <= hi; ++k) s += speed[static_cast<std::size_t>(k)];
    smooth[static_cast<std::size_t>(i)] = s / (hi - lo + 1);
  }
  BeatSequence beats;
  for (int i = 1; i + 1 < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (smooth[u] < smooth[u - 1] && smooth[u] < smooth[u + 1]) beats.push_back(i / seq.fps());
  }
  return beats;
}

double beat_align(const BeatSequence& audio_beats, const BeatSequence& gesture_beats, double sigma) {
  if (audio_beats.empty()) throw std::invalid_argument("beat_align: audio beats are empty");
  if (!(sigma > 0.0)) throw std::invalid_argument("beat_align: sigma must be positive");
  if (gesture_beats.empty()) return 0.0;
  BeatSequence sorted = audio_beats;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (double g : gesture_beats) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), g);
    double best = std::numeric_limits<double>::infinity();
    if (it != sorted.end()) best = std::min(best, std::abs(*it - g));
    if (it != sorted.begin()) best = std::min(best, std::abs(*std::prev(it) - g));
    sum += std::exp(-best * best / (2.0 * sigma * sigma));
  }
  return sum / static_cast<double>(gesture_beats.size());
}

double srgr(const GestureSequence& gen, const GestureSequence& gt, const Mat& weights, double delta) {
  if (gen.frames() != gt.frames() || gen.joints() != gt.joints()) throw std::invalid_argument("srgr: shape mismatch");
  if (!(delta > 0.0)) throw std::invalid_argument("srgr: delta must be positive");
  const bool uniform = weights.size() == 0;
  if (!uniform) {
    if (weights.rows() != gen.frames() || weights.cols() != gen.joints()) {
      throw std::invalid_argument("srgr: weights must be frames x joints");
    }
    if ((weights.array() < 0.0).any()) throw std::invalid_argument("srgr: weights must be non-negative");
  }
  double hit = 0.0, total = 0.0;
  for (int f = 0; f < gen.frames(); ++f) {
    for (int j = 0; j < gen.joints(); ++j) {
      const double w = uniform ? 1.0 : weights(f, j);
      total += w;
      if (geodesic_distance(gen.at(f, j), gt.at(f, j)) < delta) hit += w;
    }
  }
  if (!(total > 0.0)) throw std::invalid_argument("srgr: weights sum to zero");
  return hit / total;
}

MetricReport evaluate_metrics(const std::vector<FlatGesture>& real, const std::vector<FlatGesture>& gen,
                              const std::vector<BeatSequence>& audio_beats, const FeatureExtractor& extractor,
                              const MetricOptions& opt) {
  if (real.empty() || gen.empty()) throw std::invalid_argument("evaluate_metrics: empty gesture set");
  if (audio_beats.size() != gen.size()) throw std::invalid_argument("evaluate_metrics: one audio beat list per sample");
  std::vector<Mat> real_values, gen_values;
  std::vector<GestureSequence> real_seq;
  for (const auto& g : real) {
    real_values.push_back(g.values);
    real_seq.push_back(to_rotations(g.values, g.layout, g.fps));
  }
  MetricReport rep;
  rep.extractor_checksum = extractor.checksum();
  double ba = 0.0, sr = 0.0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const GestureSequence seq = to_rotations(gen[i].values, gen[i].layout, gen[i].fps);
    gen_values.push_back(flatten(seq));
    ba += beat_align(audio_beats[i], extract_gesture_beats(seq, opt.smoothing_window), opt.beat_sigma);
    sr += srgr(seq, real_seq[i % real_seq.size()], Mat(), opt.srgr_delta);
  }
  rep.beat_align = ba / static_cast<double>(gen.size());
  rep.srgr = sr / static_cast<double>(gen.size());
  const Mat real_f = extractor.features(real_values);
  const Mat gen_f = extractor.features(gen_values);
  rep.fgd = fgd_from_features(real_f, gen_f);
  Rng rng(opt.seed);
  rep.diversity = diversity_from_features(gen_f, opt.diversity_pairs, rng);
  return rep;
}

}  // namespace mdta2g
