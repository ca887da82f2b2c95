#include "mdta2g/errors.hpp"
#include "mdta2g/sampling.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mdta2g;
using test::random_mat;

namespace {

ConditionBundle empty_bundle(int frames) {
  ConditionBundle b;
  b.audio = Mat::Zero(frames, 1);
  b.text = Mat::Zero(frames, 1);
  b.id_onehot = Vec::Zero(1);
  b.emotion_onehot = Vec::Zero(1);
  return b;
}

/// Returns x_t scaled by 0.5 and counts calls.
struct CountingStub {
  int* calls;
  Mat operator()(const Mat& x, int, const ConditionBundle&) const {
    ++*calls;
    return 0.5 * x;
  }
};

}  // namespace

TEST(Anchors, EvalCountLawExhaustive) {
  for (int T = 1; T <= 300; ++T) {
    for (int N = 0; N <= 25; ++N) {
      const auto a = anchor_steps(T, N);
      ASSERT_EQ(static_cast<int>(a.size()), (T + N) / (N + 1));
      ASSERT_EQ(static_cast<int>(a.size()), expected_eval_count(T, N));
      ASSERT_EQ(a.front(), T);
      for (std::size_t i = 1; i < a.size(); ++i) ASSERT_EQ(a[i - 1] - a[i], N + 1);
      ASSERT_GE(a.back(), 1);
    }
  }
  EXPECT_EQ(expected_eval_count(1000, 20), 48);
  EXPECT_EQ(expected_eval_count(1000, 25), 39);
}

TEST(Anchors, SamplerCallsMatchLaw) {
  const Schedule s = make_schedule(57);
  for (int N : {1, 2, 5, 20, 56, 60}) {
    int calls = 0;
    SamplerConfig cfg;
    cfg.mode = SamplerMode::Accelerated;
    cfg.skip = N;
    const auto r = sample(CountingStub{&calls}, 3, 2, empty_bundle(3), s, cfg);
    EXPECT_EQ(calls, expected_eval_count(57, N));
    EXPECT_EQ(r.trace.network_eval_count, calls);
    EXPECT_EQ(r.trace.x0_norms.size(), 57u);
  }
}

TEST(SasRefresh, ScalarOracle) {
  Schedule s = make_schedule(10);
  s.alpha_bar[4] = 0.25;  // t = 5
  Mat xt(1, 1), x0(1, 1);
  xt << 1.0;
  x0 << 0.5;
  // eps_hat = (1 - 0.5*0.5)/sqrt(0.75); x0' = (1 - sqrt(0.75)/1.0005 * eps_hat)/0.5
  const double eps_hat = 0.75 / std::sqrt(0.75);
  const double expect = (1.0 - std::sqrt(0.75) / 1.0005 * eps_hat) / 0.5;
  EXPECT_NEAR(sas_refresh(xt, x0, 5, 1.0005, s)(0, 0), expect, 1e-14);
  EXPECT_NEAR(expect, 0.5 + 0.75 * (1 - 1 / 1.0005) / 0.5, 1e-14);
}

TEST(SasRefresh, ScaleOneIsIdentityAndLargerScaleMovesTowardsXt) {
  const Schedule s = make_schedule(1000);
  Rng rng(1);
  for (int t : {1, 10, 500, 1000}) {
    const Mat xt = random_mat(4, 3, rng);
    const Mat x0 = random_mat(4, 3, rng);
    EXPECT_LT((sas_refresh(xt, x0, t, 1.0, s) - x0).cwiseAbs().maxCoeff(), 1e-9 / std::sqrt(s.alpha_bar_at(t)));
    // Linear in (x_t, x0) with weights summing to one at the x_t/sqrt(ab) fixed point.
    const double sa = std::sqrt(s.alpha_bar_at(t));
    const Mat fixed = xt / sa;
    EXPECT_LT((sas_refresh(xt, fixed, t, 3.0, s) - fixed).cwiseAbs().maxCoeff(), 1e-9 / sa);
  }
  EXPECT_ANY_THROW(sas_refresh(Mat::Zero(1, 1), Mat::Zero(1, 1), 1, 0.99, s));
  EXPECT_ANY_THROW(sas_refresh(Mat::Zero(1, 1), Mat::Zero(1, 1), 0, 1.0, s));
}

TEST(Sampler, FullModeMatchesHandLoop) {
  const Schedule s = make_schedule(30);
  int calls = 0;
  SamplerConfig cfg;
  cfg.seed = 99;
  const auto r = sample(CountingStub{&calls}, 4, 3, empty_bundle(4), s, cfg);
  Rng rng(99);
  Mat x = gaussian_like(4, 3, rng);
  for (int t = 30; t >= 1; --t) {
    const Mat x0 = 0.5 * x;
    const double ab = s.alpha_bar_at(t), abp = s.alpha_bar_at(t - 1), b = s.beta_at(t);
    Mat mean = std::sqrt(abp) * b / (1 - ab) * x0 + std::sqrt(1 - b) * (1 - abp) / (1 - ab) * x;
    if (t > 1) mean += std::sqrt(b) * gaussian_like(4, 3, rng);
    x = mean;
  }
  EXPECT_LT((r.x0 - x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(calls, 30);
}

TEST(Sampler, AcceleratedMatchesHandLoop) {
  const Schedule s = make_schedule(25);
  int calls = 0;
  SamplerConfig cfg;
  cfg.mode = SamplerMode::Accelerated;
  cfg.skip = 4;
  cfg.scale = 1.01;
  cfg.seed = 5;
  const auto r = sample(CountingStub{&calls}, 2, 2, empty_bundle(2), s, cfg);
  Rng rng(5);
  Mat x = gaussian_like(2, 2, rng);
  Mat x0;
  for (int t = 25; t >= 1; --t) {
    if ((25 - t) % 5 == 0) {
      x0 = 0.5 * x;
    } else {
      const double sa = std::sqrt(s.alpha_bar_at(t)), sn = std::sqrt(1 - s.alpha_bar_at(t));
      const Mat e = (x - sa * x0) / sn;
      x0 = (x - sn / 1.01 * e) / sa;
    }
    x = posterior_step(x, x0, t, s, rng);
  }
  EXPECT_LT((r.x0 - x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(calls, 5);
}

TEST(Sampler, DeterministicForSeedAndModel) {
  MdtConfig mc = make_variant("XS", test::tiny_dims(2), 20);
  const MdtModel model(mc, 1);
  Rng rng(2);
  const ConditionBundle b = test::random_bundle(6, mc.fusion.dims, rng);
  const Schedule s = make_schedule(20);
  SamplerConfig cfg;
  cfg.mode = SamplerMode::Accelerated;
  cfg.skip = 3;
  cfg.seed = 8;
  const Mat a = sample(model, 6, b, s, cfg).x0;
  EXPECT_EQ(sample(model, 6, b, s, cfg).x0, a);
  cfg.seed = 9;
  EXPECT_NE(sample(model, 6, b, s, cfg).x0, a);
}

TEST(Sampler, RejectsBadConfigAndShapes) {
  const Schedule s = make_schedule(10);
  SamplerConfig cfg;
  cfg.mode = SamplerMode::Accelerated;
  cfg.skip = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.skip = 2;
  cfg.scale = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(sampler_mode_from_string("fast"), ConfigError);
  const Denoiser bad = [](const Mat& x, int, const ConditionBundle&) { return Mat(x.rows(), x.cols() + 1); };
  EXPECT_ANY_THROW(sample(bad, 2, 2, empty_bundle(2), s, SamplerConfig{}));
  const Denoiser nan = [](const Mat& x, int, const ConditionBundle&) {
    return Mat::Constant(x.rows(), x.cols(), std::numeric_limits<double>::quiet_NaN());
  };
  EXPECT_ANY_THROW(sample(nan, 2, 2, empty_bundle(2), s, SamplerConfig{}));
}

TEST(Bench, RowsAndRequirements) {
  const Schedule s = make_schedule(40);
  int calls = 0;
  std::vector<SamplerConfig> cfgs(2);
  cfgs[1].mode = SamplerMode::Accelerated;
  cfgs[1].skip = 9;
  const auto rows = bench_sampler(CountingStub{&calls}, 3, 2, empty_bundle(3), s, cfgs, 3,
                                  [](const std::vector<Mat>& outs) {
                                    return std::map<std::string, double>{{"n", static_cast<double>(outs.size())}};
                                  });
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].label, "full");
  EXPECT_EQ(rows[0].eval_count, 40);
  EXPECT_EQ(rows[1].label, "1:9");
  EXPECT_EQ(rows[1].eval_count, 4);
  EXPECT_EQ(rows[1].metrics.at("n"), 3.0);
  EXPECT_EQ(calls, 3 * 40 + 3 * 4);
  EXPECT_GE(rows[0].median_time_s, 0.0);
  EXPECT_THROW(bench_sampler(CountingStub{&calls}, 3, 2, empty_bundle(3), s, {cfgs[1], cfgs[1]}), ConfigError);
  EXPECT_THROW(bench_sampler(CountingStub{&calls}, 3, 2, empty_bundle(3), s, {cfgs[0]}), ConfigError);
}
