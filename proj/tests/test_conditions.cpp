#include "mdta2g/conditions.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mdta2g;
using test::random_mat;

namespace {

FusionConfig tiny_fusion(int window = 8) {
  FusionConfig c;
  c.dims = test::tiny_dims(2);
  c.widths = FusionWidths::for_model_width(32);
  c.window_size = window;
  c.max_timestep = 100;
  return c;
}

/// Dense attention with an explicit block-diagonal window mask, naive loops.
Mat dense_window_attention(const Mat& x, int window, const CrossLocalAttention& w) {
  const Mat q = (x * w.query.weight.value()).rowwise() + w.query.bias.value().row(0);
  const Mat k = (x * w.key.weight.value()).rowwise() + w.key.bias.value().row(0);
  const Mat v = (x * w.value.weight.value()).rowwise() + w.value.bias.value().row(0);
  const auto n = x.rows();
  Mat out = Mat::Zero(n, v.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> s(static_cast<std::size_t>(n), -1e300);
    double mx = -1e300;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i / window != j / window) continue;
      s[j] = q.row(i).dot(k.row(j)) / std::sqrt(static_cast<double>(q.cols()));
      mx = std::max(mx, s[j]);
    }
    double z = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i / window == j / window) z += std::exp(s[j] - mx);
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i / window == j / window) out.row(i) += std::exp(s[j] - mx) / z * v.row(j);
    }
  }
  return out;
}

void randomize(ParameterStore& store, Rng& rng, double scale = 0.3) {
  for (const auto& e : store.entries()) {
    ad::Var v = e.var;
    v.mutable_value() = random_mat(v.rows(), v.cols(), rng, scale);
  }
}

}  // namespace

TEST(TimeEmbedding, SinusoidDefinition) {
  const Vec pe = sinusoidal_encoding(7.0, 16);
  EXPECT_DOUBLE_EQ(pe[0], std::sin(7.0));
  EXPECT_DOUBLE_EQ(pe[1], std::cos(7.0));
  EXPECT_DOUBLE_EQ(pe[2], std::sin(7.0 * std::pow(10000.0, -2.0 / 16)));
}

TEST(TimeEmbedding, DeterministicAndRangeChecked) {
  ParameterStore store;
  Rng rng(1);
  const FusionParams p = FusionParams::create(tiny_fusion(), store, rng);
  EXPECT_EQ(embed_time(1, p).vector, embed_time(1, p).vector);
  EXPECT_EQ(embed_time(1, p).vector.size(), p.config.widths.id);
  EXPECT_ANY_THROW(embed_time(0, p));
  EXPECT_ANY_THROW(embed_time(101, p));
}

TEST(TimeEmbedding, IdentityMlpGivesRawEncoding) {
  ParameterStore store;
  Rng rng(2);
  FusionParams p = FusionParams::create(tiny_fusion(), store, rng);
  p.time_mlp.output.weight.mutable_value().setZero();
  p.time_mlp.output.bias.mutable_value().setZero();
  const Vec got = embed_time(42, p).vector;
  EXPECT_LT((got - sinusoidal_encoding(42, p.config.widths.id)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ConditionDropout, ZeroProbabilityKeepsBundle) {
  Rng rng(3);
  const ConditionBundle b = test::random_bundle(5, test::tiny_dims(), rng);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(condition_dropout(b, 0.0, rng), b);
}

TEST(ConditionDropout, NearOneDropsBoth) {
  Rng rng(4);
  const ConditionBundle b = test::random_bundle(5, test::tiny_dims(), rng);
  int both = 0;
  for (int i = 0; i < 1000; ++i) {
    const ConditionBundle d = condition_dropout(b, 0.999, rng);
    EXPECT_EQ(d.audio, b.audio);
    EXPECT_EQ(d.text, b.text);
    both += d.id_onehot.isZero(0) && d.emotion_onehot.isZero(0);
  }
  EXPECT_GE(both, 990);
}

TEST(ConditionDropout, HalfRate) {
  Rng data_rng(5);
  const ConditionBundle b = test::random_bundle(5, test::tiny_dims(), data_rng);
  Rng rng(7);
  int id_drops = 0, emo_drops = 0;
  for (int i = 0; i < 10000; ++i) {
    const ConditionBundle d = condition_dropout(b, 0.5, rng);
    id_drops += d.id_onehot.isZero(0);
    emo_drops += d.emotion_onehot.isZero(0);
  }
  EXPECT_NEAR(id_drops / 10000.0, 0.5, 0.02);
  EXPECT_NEAR(emo_drops / 10000.0, 0.5, 0.02);
}

TEST(CrossLocalAttention, WindowMask) {
  const Mat m = local_window_mask(5, 2);
  EXPECT_EQ(m(0, 1), 1);
  EXPECT_EQ(m(1, 2), 0);
  EXPECT_EQ(m(4, 4), 1);
  EXPECT_EQ(m(4, 3), 0);
}

TEST(CrossLocalAttention, MatchesDenseOracle) {
  ParameterStore store;
  Rng rng(6);
  FusionParams p = FusionParams::create(tiny_fusion(), store, rng);
  randomize(store, rng);
  const int d = p.config.widths.total();
  for (auto [frames, window] : {std::pair{6, 3}, std::pair{4, 2}, std::pair{7, 3}}) {
    const Mat x = random_mat(frames, d, rng);
    const Mat got = cross_local_attention(ad::constant(x), window, p.attention).value();
    EXPECT_LT((got - dense_window_attention(x, window, p.attention)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(CrossLocalAttention, DegenerateWindows) {
  ParameterStore store;
  Rng rng(7);
  FusionParams p = FusionParams::create(tiny_fusion(), store, rng);
  randomize(store, rng);
  const int d = p.config.widths.total();
  const Mat x = random_mat(5, d, rng);
  const Mat full = cross_local_attention(ad::constant(x), 5, p.attention).value();
  EXPECT_LT((cross_local_attention(ad::constant(x), 50, p.attention).value() - full).cwiseAbs().maxCoeff(), 1e-15);
  const Mat own = (x * p.attention.value.weight.value()).rowwise() + p.attention.value.bias.value().row(0);
  EXPECT_LT((cross_local_attention(ad::constant(x), 1, p.attention).value() - own).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Fuse, IdentityAttentionReturnsConcat) {
  ParameterStore store;
  Rng rng(8);
  const FusionParams p = FusionParams::create(tiny_fusion(1), store, rng);
  const Mat xt = random_mat(4, p.config.dims.gesture_dim, rng);
  const ConditionBundle b = test::random_bundle(4, p.config.dims, rng);
  const ad::Var t_hat = embed_time_var(3, p);
  const Mat concat = fuse_concat(xt, b, t_hat, p).value();
  EXPECT_LT((fuse(xt, b, t_hat, p).value() - concat).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(concat.cols(), p.config.widths.total());
}

TEST(Fuse, ZeroInputsGiveZeroConcat) {
  ParameterStore store;
  Rng rng(9);
  FusionParams p = FusionParams::create(tiny_fusion(), store, rng);
  for (auto* l : {&p.gesture_in, &p.speaker, &p.emotion, &p.text, &p.audio}) l->bias.mutable_value().setZero();
  const auto& d = p.config.dims;
  ConditionBundle b{Mat::Zero(4, d.audio_dim), Mat::Zero(4, d.text_dim), Vec::Zero(d.n_speakers),
                    Vec::Zero(d.n_emotions)};
  const ad::Var zero_t = ad::constant(Mat::Zero(1, p.config.widths.id));
  EXPECT_TRUE(fuse_concat(Mat::Zero(4, d.gesture_dim), b, zero_t, p).value().isZero(0));
}

TEST(Fuse, SpeakerChangeBroadcastsIdentically) {
  ParameterStore store;
  Rng rng(10);
  const FusionParams p = FusionParams::create(tiny_fusion(), store, rng);
  const Mat xt = random_mat(5, p.config.dims.gesture_dim, rng);
  ConditionBundle a = test::random_bundle(5, p.config.dims, rng);
  ConditionBundle b = a;
  b.id_onehot.setZero();
  b.id_onehot(2) = 1.0;
  const ad::Var t_hat = embed_time_var(9, p);
  const Mat diff = fuse_concat(xt, a, t_hat, p).value() - fuse_concat(xt, b, t_hat, p).value();
  EXPECT_GT(diff.cwiseAbs().maxCoeff(), 0.0);
  for (Eigen::Index f = 1; f < 5; ++f) EXPECT_EQ(diff.row(f), diff.row(0));
}

TEST(Fuse, RowsAreStochasticAndShapesChecked) {
  ParameterStore store;
  Rng rng(11);
  const FusionParams p = FusionParams::create(tiny_fusion(), store, rng);
  ConditionBundle b = test::random_bundle(4, p.config.dims, rng);
  const Mat xt = random_mat(4, p.config.dims.gesture_dim, rng);
  EXPECT_ANY_THROW(fuse(random_mat(4, 3, rng), b, embed_time_var(1, p), p));
  b.audio = random_mat(3, p.config.dims.audio_dim, rng);
  EXPECT_ANY_THROW(fuse(xt, b, embed_time_var(1, p), p));
  Mat logits = random_mat(6, 6, rng);
  const Mat sm = ad::softmax_rows(ad::constant(logits), local_window_mask(6, 4)).value();
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(sm.row(i).sum(), 1.0, 1e-12);
}

TEST(Fuse, GradientsMatchFiniteDifferences) {
  ParameterStore store;
  Rng rng(12);
  FusionParams p = FusionParams::create(tiny_fusion(2), store, rng);
  randomize(store, rng, 0.2);
  const Mat xt = random_mat(4, p.config.dims.gesture_dim, rng);
  const ConditionBundle b = test::random_bundle(4, p.config.dims, rng);
  const Mat target = random_mat(4, p.config.widths.total(), rng);
  auto forward = [&] { return ad::mse_mean(fuse(xt, b, embed_time_var(17, p), p), target); };
  store.zero_grad();
  forward().backward();
  for (const auto& e : store.entries()) {
    ad::Var v = e.var;
    Mat analytic = v.grad().size() ? v.grad() : Mat::Zero(v.rows(), v.cols());
    auto loss = [&] {
      ad::NoGradGuard g;
      return forward().value()(0, 0);
    };
    const double err = test::max_fd_error(loss, v.mutable_value(), analytic, test::probe_entries(analytic, 6, rng));
    EXPECT_LT(err, 1e-3) << e.name;
  }
}
