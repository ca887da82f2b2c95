#include "mdta2g/feature_extractor.hpp"
#include "mdta2g/metrics.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace mdta2g;
using test::random_mat;

namespace {

Mat random_spd(int d, Rng& rng) {
  const Mat a = random_mat(d, d, rng);
  return a * a.transpose() + 0.1 * Mat::Identity(d, d);
}

using LMat = Eigen::Matrix<long double, 3, 3>;

/// Roots of the characteristic cubic of a 3x3 matrix with real positive spectrum.
std::array<long double, 3> cubic_eigenvalues(const LMat& m) {
  const long double c2 = m.trace();
  const long double c1 = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) + m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0) +
                         m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
  const long double c0 = m.determinant();
  // lambda^3 - c2 lambda^2 + c1 lambda - c0 = 0; substitute lambda = y + c2/3.
  const long double p = c1 - c2 * c2 / 3;
  const long double q = -2 * c2 * c2 * c2 / 27 + c2 * c1 / 3 - c0;
  const long double r = std::sqrt(-p / 3);
  const long double arg = std::clamp(-q / (2 * r * r * r), -1.0L, 1.0L);
  const long double phi = std::acos(arg) / 3;
  const long double pi = std::numbers::pi_v<long double>;
  std::array<long double, 3> out;
  for (int k = 0; k < 3; ++k) out[k] = 2 * r * std::cos(phi - 2 * pi * k / 3) + c2 / 3;
  return out;
}

GestureSequence rotating_joint(int frames, double fps, const std::function<double(double)>& angle) {
  GestureSequence s(SkeletonLayout::custom(1), frames, fps);
  for (int f = 0; f < frames; ++f) s.at(f, 0) = axis_rotation('Z', angle(f / fps));
  return s;
}

}  // namespace

TEST(Frechet, OneDimensionalClosedForm) {
  Vec a(1), b(1);
  a << 0.0;
  b << 1.0;
  const Mat one = Mat::Identity(1, 1);
  EXPECT_NEAR(frechet_distance(a, one, b, one), 1.0, 1e-10);
  Mat v4(1, 1);
  v4 << 4.0;
  // (0-1)^2 + 1 + 4 - 2*2 = 2
  EXPECT_NEAR(frechet_distance(a, one, b, v4), 2.0, 1e-10);
}

TEST(Frechet, ThreeDimensionalExtendedPrecisionOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat s1 = random_spd(3, rng), s2 = random_spd(3, rng);
    const Vec m1 = random_mat(3, 1, rng), m2 = random_mat(3, 1, rng);
    // tr (S1 S2)^{1/2} = sum of square roots of eig(S1 S2).
    const LMat prod = s1.cast<long double>() * s2.cast<long double>();
    long double cross = 0;
    for (long double e : cubic_eigenvalues(prod)) cross += std::sqrt(std::max(e, 0.0L));
    const long double expect = (m1 - m2).cast<long double>().squaredNorm() + s1.trace() + s2.trace() - 2 * cross;
    EXPECT_NEAR(frechet_distance(m1, s1, m2, s2), static_cast<double>(expect), 1e-8);
  }
}

TEST(Frechet, SymmetricAndZeroOnIdenticalMoments) {
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const Mat s1 = random_spd(5, rng), s2 = random_spd(5, rng);
    const Vec m1 = random_mat(5, 1, rng), m2 = random_mat(5, 1, rng);
    EXPECT_NEAR(frechet_distance(m1, s1, m2, s2), frechet_distance(m2, s2, m1, s1), 1e-9);
    EXPECT_NEAR(frechet_distance(m1, s1, m1, s1), 0.0, 1e-9);
  }
  Mat asym = Mat::Identity(2, 2);
  asym(0, 1) = 1e-3;
  EXPECT_ANY_THROW(frechet_distance(Vec::Zero(2), asym, Vec::Zero(2), Mat::Identity(2, 2)));
}

TEST(Fgd, IdentityOrderingAndBypassOracle) {
  FeatureExtractorConfig cfg;
  cfg.window = 4;
  cfg.frame_hidden = 4;
  cfg.mix_hidden = 8;
  cfg.feature_dim = 3;
  const FeatureExtractor fx(cfg, 2);
  Rng rng(3);
  std::vector<Mat> real;
  for (int i = 0; i < 6; ++i) {
    Mat m(20, 2);
    for (int f = 0; f < 20; ++f) m.row(f) << std::sin(0.3 * f + i), std::cos(0.2 * f * (i + 1));
    real.push_back(m + 0.05 * random_mat(20, 2, rng));
  }
  EXPECT_LE(fgd(real, real, fx), 1e-6);
  std::vector<Mat> fewer(real.begin(), real.end() - 1);
  std::vector<Mat> noise;
  for (int i = 0; i < 6; ++i) noise.push_back(3.0 * random_mat(20, 2, rng));
  const double near = fgd(real, fewer, fx);
  EXPECT_GT(near, 0.0);
  EXPECT_LT(near, fgd(real, noise, fx));
  const GaussianMoments a = fit_moments(fx.features(real));
  const GaussianMoments b = fit_moments(fx.features(noise));
  EXPECT_NEAR(fgd(real, noise, fx), frechet_distance(a.mean, a.cov, b.mean, b.cov), 1e-12);
  EXPECT_ANY_THROW(fgd_from_features(Mat::Zero(3, 3), Mat::Zero(10, 3)));
}

TEST(Diversity, IdentityTwoSamplesAndMonteCarlo) {
  Rng rng(4);
  EXPECT_EQ(diversity_from_features(Mat::Ones(5, 3), 100, rng), 0.0);
  Mat two(2, 2);
  two << 0, 0, 3, 4;
  EXPECT_DOUBLE_EQ(diversity_from_features(two, 7, rng), 5.0);
  EXPECT_DOUBLE_EQ(diversity_from_features(two, 0, rng), 5.0);

  const Mat f = random_mat(10, 4, rng);
  double sum = 0, sq = 0;
  int pairs = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = i + 1; j < 10; ++j) {
      const double d = (f.row(i) - f.row(j)).norm();
      sum += d;
      sq += d * d;
      ++pairs;
    }
  }
  const double mean = sum / pairs;
  EXPECT_NEAR(diversity_from_features(f, 0, rng), mean, 1e-12);
  const double sd = std::sqrt(sq / pairs - mean * mean);
  const int draws = 2000;
  EXPECT_NEAR(diversity_from_features(f, draws, rng), mean, 3 * sd / std::sqrt(double(draws)));
  EXPECT_ANY_THROW(diversity_from_features(Mat::Zero(1, 2), 10, rng));
}

TEST(BeatAlign, KernelValues) {
  EXPECT_DOUBLE_EQ(beat_align({0.5, 1.0, 2.0}, {0.5, 1.0, 2.0}, 0.1), 1.0);
  const double d = 0.1 * std::sqrt(2 * std::log(2.0));
  EXPECT_NEAR(beat_align({1.0}, {1.0 + d}, 0.1), 0.5, 1e-12);
  EXPECT_EQ(beat_align({1.0}, {}, 0.1), 0.0);
  EXPECT_ANY_THROW(beat_align({}, {1.0}, 0.1));
  EXPECT_ANY_THROW(beat_align({1.0}, {1.0}, 0.0));
}

TEST(BeatAlign, BruteForceOracleAndInvariances) {
  Rng rng(5);
  for (int c = 0; c < 100; ++c) {
    BeatSequence a, g;
    const int na = 1 + static_cast<int>(rng.uniform_int(12)), ng = 1 + static_cast<int>(rng.uniform_int(12));
    for (int i = 0; i < na; ++i) a.push_back(rng.uniform(0, 5));
    for (int i = 0; i < ng; ++i) g.push_back(rng.uniform(0, 5));
    std::sort(a.begin(), a.end());
    std::sort(g.begin(), g.end());
    double expect = 0;
    for (double gb : g) {
      double best = 1e300;
      for (double ab : a) best = std::min(best, (gb - ab) * (gb - ab));
      expect += std::exp(-best / (2 * 0.1 * 0.1));
    }
    expect /= ng;
    const double got = beat_align(a, g, 0.1);
    EXPECT_NEAR(got, expect, 1e-12);
    BeatSequence as = a, gs = g;
    for (double& v : as) v += 0.375;
    for (double& v : gs) v += 0.375;
    EXPECT_NEAR(beat_align(as, gs, 0.1), got, 1e-9);
    EXPECT_GE(beat_align(a, g, 0.2), got);
  }
}

TEST(GestureBeats, ConstantSequenceHasNone) {
  GestureSequence s = rotating_joint(40, 30, [](double) { return 0.3; });
  EXPECT_TRUE(extract_gesture_beats(s).empty());
  EXPECT_ANY_THROW(extract_gesture_beats(rotating_joint(2, 30, [](double) { return 0.0; })));
}

TEST(GestureBeats, SinusoidMinimaAtVelocityZeros) {
  const double pi = std::numbers::pi;
  const GestureSequence s = rotating_joint(120, 30, [&](double t) { return 0.5 * std::sin(2 * pi * t); });
  const BeatSequence beats = extract_gesture_beats(s, 5);
  // Angular speed |0.5 * 2pi cos(2pi t)| vanishes at t = 0.25 + 0.5 k.
  ASSERT_EQ(beats.size(), 8u);
  for (std::size_t k = 0; k < beats.size(); ++k) {
    EXPECT_NEAR(beats[k], 0.25 + 0.5 * static_cast<double>(k), 1.5 / 30);
    if (k) {
      EXPECT_GT(beats[k], beats[k - 1]);
    }
    EXPECT_GE(beats[k], 0.0);
    EXPECT_LE(beats[k], s.duration());
  }
}

TEST(Srgr, Cases) {
  Rng rng(6);
  GestureSequence gt(SkeletonLayout::custom(4), 5);
  for (int f = 0; f < 5; ++f) {
    for (int j = 0; j < 4; ++j) {
      Vec3 aa(rng.normal(), rng.normal(), rng.normal());
      gt.at(f, j) = axis_angle_to_rotmat(aa);
    }
  }
  Mat w = Mat::Constant(5, 4, 0.5);
  w(2, 1) = 3.0;
  EXPECT_DOUBLE_EQ(srgr(gt, gt), 1.0);
  EXPECT_DOUBLE_EQ(srgr(gt, gt, w), 1.0);

  GestureSequence off = gt, mixed = gt;
  for (int f = 0; f < 5; ++f) {
    for (int j = 0; j < 4; ++j) {
      off.at(f, j) = gt.at(f, j) * axis_rotation('X', 0.2);
      if (j % 2) mixed.at(f, j) = gt.at(f, j) * axis_rotation('Y', 0.5);
      else mixed.at(f, j) = gt.at(f, j) * axis_rotation('Y', 0.05);
    }
  }
  EXPECT_DOUBLE_EQ(srgr(off, gt, Mat(), 0.1), 0.0);
  EXPECT_DOUBLE_EQ(srgr(mixed, gt), 0.5);
  EXPECT_NEAR(srgr(mixed, gt, w), srgr(mixed, gt, 7.5 * w), 1e-15);
  Mat wj = Mat::Zero(5, 4);
  wj.col(0).setOnes();
  EXPECT_DOUBLE_EQ(srgr(mixed, gt, wj), 1.0);
  EXPECT_ANY_THROW(srgr(mixed, GestureSequence(SkeletonLayout::custom(3), 5)));
  EXPECT_ANY_THROW(srgr(mixed, gt, Mat::Zero(5, 4)));
  EXPECT_ANY_THROW(srgr(mixed, gt, -w));
}

TEST(EvaluateMetrics, ReportsAllFourOnIdenticalSets) {
  const auto samples = synth_dataset(3, 40, SkeletonLayout::custom(2), 7, SynthOptions{});
  std::vector<FlatGesture> real;
  std::vector<BeatSequence> beats;
  for (const auto& s : samples) {
    real.push_back({flatten(s.motion), s.motion.layout(), s.motion.fps()});
    beats.push_back(s.audio_beats);
  }
  FeatureExtractorConfig cfg;
  cfg.window = 8;
  cfg.feature_dim = 4;
  cfg.frame_hidden = 4;
  cfg.mix_hidden = 8;
  const FeatureExtractor fx(cfg, 18);
  const MetricReport r = evaluate_metrics(real, real, beats, fx);
  EXPECT_LE(r.fgd, 1e-6);
  EXPECT_DOUBLE_EQ(r.srgr, 1.0);
  EXPECT_GT(r.diversity, 0.0);
  EXPECT_GE(r.beat_align, 0.0);
  EXPECT_LE(r.beat_align, 1.0);
  EXPECT_EQ(r.extractor_checksum, fx.checksum());
}
