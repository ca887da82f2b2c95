#include "mdta2g/feature_extractor.hpp"

#include "mdta2g/errors.hpp"
#include "mdta2g/training.hpp"

#include <cmath>
#include <cstring>

namespace mdta2g {

void FeatureExtractorConfig::validate() const {
  if (window < 1) throw ConfigError("window must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (frame_hidden < 1 || mix_hidden < 1 || feature_dim < 1) throw ConfigError("extractor widths must be >= 1");
  if (steps < 0) throw ConfigError("extractor steps must be >= 0");
  if (batch_size < 1) throw ConfigError("extractor batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("extractor learning_rate must be positive");
}

int window_count(int frames, int window, int stride) {
  return frames < window ? 0 : (frames - window) / stride + 1;
}

FeatureExtractor::FeatureExtractor(const FeatureExtractorConfig& cfg, int input_width)
    : cfg_(cfg), input_width_(input_width) {
  cfg_.validate();
  if (input_width < 1) throw ConfigError("extractor input width must be >= 1");
  Rng rng(derive_seed(cfg.seed, 0xFEA7ULL));
  const int flat = cfg.window * cfg.frame_hidden;
  const double s = 0.05;
  frame_in_ = Linear::create(store_, "frame_in", input_width, cfg.frame_hidden, rng, s);
  mix_in_ = Linear::create(store_, "mix_in", flat, cfg.mix_hidden, rng, s);
  bottleneck_ = Linear::create(store_, "bottleneck", cfg.mix_hidden, cfg.feature_dim, rng, s);
  expand_ = Linear::create(store_, "expand", cfg.feature_dim, cfg.mix_hidden, rng, s);
  mix_out_ = Linear::create(store_, "mix_out", cfg.mix_hidden, flat, rng, s);
  frame_out_ = Linear::create(store_, "frame_out", cfg.frame_hidden, input_width, rng, s);
  mean_ = Vec::Zero(input_width);
  std_ = Vec::Ones(input_width);
}

ad::Var FeatureExtractor::encode(const ad::Var& stacked) const {
  if (stacked.cols() != input_width_ || stacked.rows() % cfg_.window != 0) {
    throw std::invalid_argument("FeatureExtractor: input must be (B*window) x input_width");
  }
  const Eigen::Index batch = stacked.rows() / cfg_.window;
  ad::Var h = ad::gelu(frame_in_(stacked));
  h = ad::reshape(h, batch, static_cast<Eigen::Index>(cfg_.window) * cfg_.frame_hidden);
  h = ad::gelu(mix_in_(h));
  return bottleneck_(h);
}

ad::Var FeatureExtractor::decode(const ad::Var& features) const {
  const Eigen::Index batch = features.rows();
  ad::Var h = ad::gelu(expand_(features));
  h = ad::gelu(mix_out_(h));
  h = ad::reshape(h, batch * cfg_.window, cfg_.frame_hidden);
  return frame_out_(h);
}

Mat FeatureExtractor::standardized_windows(const std::vector<Mat>& sequences, int* count) const {
  int total = 0;
  for (const auto& s : sequences) {
    if (s.cols() != input_width_) throw std::invalid_argument("FeatureExtractor: sequence width mismatch");
    total += window_count(static_cast<int>(s.rows()), cfg_.window, cfg_.stride);
  }
  Mat out(static_cast<Eigen::Index>(total) * cfg_.window, input_width_);
  Eigen::Index row = 0;
  const Eigen::RowVectorXd mu = mean_.transpose();
  const Eigen::RowVectorXd inv = std_.cwiseInverse().transpose();
  for (const auto& s : sequences) {
    const int n = window_count(static_cast<int>(s.rows()), cfg_.window, cfg_.stride);
    for (int w = 0; w < n; ++w) {
      out.middleRows(row, cfg_.window) =
          ((s.middleRows(static_cast<Eigen::Index>(w) * cfg_.stride, cfg_.window).rowwise() - mu).array().rowwise() *
           inv.array())
              .matrix();
      row += cfg_.window;
    }
  }
  if (count) *count = total;
  return out;
}

Mat FeatureExtractor::features(const std::vector<Mat>& sequences) const {
  int n = 0;
  const Mat windows = standardized_windows(sequences, &n);
  Mat out(n, cfg_.feature_dim);
  ad::NoGradGuard guard;
  constexpr int chunk = 64;
  for (int start = 0; start < n; start += chunk) {
    const int len = std::min(chunk, n - start);
    out.middleRows(start, len) =
        encode(ad::constant(windows.middleRows(static_cast<Eigen::Index>(start) * cfg_.window,
                                               static_cast<Eigen::Index>(len) * cfg_.window)))
            .value();
  }
  return out;
}

Mat FeatureExtractor::features(const Mat& sequence) const { return features(std::vector<Mat>{sequence}); }

double FeatureExtractor::reconstruction_mse(const std::vector<Mat>& sequences) const {
  int n = 0;
  const Mat windows = standardized_windows(sequences, &n);
  if (n == 0) throw std::invalid_argument("FeatureExtractor: no complete window in the input");
  ad::NoGradGuard guard;
  return (decode(encode(ad::constant(windows))).value() - windows).squaredNorm() / static_cast<double>(windows.size());
}

namespace {

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

std::uint64_t FeatureExtractor::checksum() const {
  std::uint64_t h = store_checksum(store_);
  fnv_bytes(h, mean_.data(), sizeof(double) * static_cast<std::size_t>(mean_.size()));
  fnv_bytes(h, std_.data(), sizeof(double) * static_cast<std::size_t>(std_.size()));
  const int dims[] = {cfg_.window, cfg_.stride, cfg_.frame_hidden, cfg_.mix_hidden, cfg_.feature_dim, input_width_};
  fnv_bytes(h, dims, sizeof dims);
  return h;
}

Checkpoint FeatureExtractor::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.meta["fx.window"] = std::to_string(cfg_.window);
  ckpt.meta["fx.stride"] = std::to_string(cfg_.stride);
  ckpt.meta["fx.frame_hidden"] = std::to_string(cfg_.frame_hidden);
  ckpt.meta["fx.mix_hidden"] = std::to_string(cfg_.mix_hidden);
  ckpt.meta["fx.feature_dim"] = std::to_string(cfg_.feature_dim);
  ckpt.meta["fx.input_width"] = std::to_string(input_width_);
  ckpt.meta["fx.final_loss"] = format_double(final_loss_);
  ckpt.meta["fx.warning"] = warning_;
  ckpt.meta["fx.checksum"] = std::to_string(checksum());
  ckpt.add_store(store_, "fx.");
  ckpt.tensors.emplace_back("fx.mean", Mat(mean_.transpose()));
  ckpt.tensors.emplace_back("fx.std", Mat(std_.transpose()));
  return ckpt;
}

FeatureExtractor FeatureExtractor::from_checkpoint(const Checkpoint& ckpt) {
  FeatureExtractorConfig cfg;
  cfg.window = std::stoi(ckpt.meta.at("fx.window"));
  cfg.stride = std::stoi(ckpt.meta.at("fx.stride"));
  cfg.frame_hidden = std::stoi(ckpt.meta.at("fx.frame_hidden"));
  cfg.mix_hidden = std::stoi(ckpt.meta.at("fx.mix_hidden"));
  cfg.feature_dim = std::stoi(ckpt.meta.at("fx.feature_dim"));
  FeatureExtractor fx(cfg, std::stoi(ckpt.meta.at("fx.input_width")));
  ckpt.load_store(fx.store_, "fx.");
  fx.mean_ = ckpt.tensor("fx.mean").row(0).transpose();
  fx.std_ = ckpt.tensor("fx.std").row(0).transpose();
  fx.final_loss_ = std::stod(ckpt.meta.at("fx.final_loss"));
  fx.warning_ = ckpt.meta.at("fx.warning");
  if (std::to_string(fx.checksum()) != ckpt.meta.at("fx.checksum")) {
    throw ParseError(0, "feature extractor checksum mismatch");
  }
  return fx;
}

FeatureExtractor train_feature_extractor(const std::vector<Mat>& sequences, const FeatureExtractorConfig& cfg) {
  cfg.validate();
  if (sequences.empty()) throw std::invalid_argument("train_feature_extractor: empty dataset");
  const int width = static_cast<int>(sequences.front().cols());
  FeatureExtractor fx(cfg, width);

  Eigen::Index rows = 0;
  for (const auto& s : sequences) rows += s.rows();
  Mat all(rows, width);
  rows = 0;
  for (const auto& s : sequences) {
    if (s.cols() != width) throw std::invalid_argument("train_feature_extractor: sequence width mismatch");
    all.middleRows(rows, s.rows()) = s;
    rows += s.rows();
  }
  fx.mean_ = all.colwise().mean().transpose();
  fx.std_ = ((all.rowwise() - fx.mean_.transpose()).cwiseAbs2().colwise().mean()).cwiseSqrt().transpose();
  for (Eigen::Index i = 0; i < fx.std_.size(); ++i) {
    if (fx.std_(i) < 1e-8) fx.std_(i) = 1.0;  // constant columns pass through centered
  }

  int n = 0;
  const Mat windows = fx.standardized_windows(sequences, &n);
  if (n < 16) {
    throw std::invalid_argument("train_feature_extractor: need at least 16 windows, got " + std::to_string(n));
  }
  AdamWConfig opt_cfg;
  opt_cfg.learning_rate = cfg.learning_rate;
  opt_cfg.weight_decay = 0.0;
  AdamW opt(fx.store_, opt_cfg);
  Rng rng(derive_seed(cfg.seed, 0xB47C5ULL));
  const int batch = std::min(cfg.batch_size, n);
  const Eigen::Index w = cfg.window;
  Mat x(batch * w, width);
  for (int step = 0; step < cfg.steps; ++step) {
    for (int b = 0; b < batch; ++b) {
      const auto pick = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
      x.middleRows(b * w, w) = windows.middleRows(pick * w, w);
    }
    fx.store_.zero_grad();
    ad::Var loss = ad::mse_mean(fx.decode(fx.encode(ad::constant(x))), x);
    loss.backward();
    opt.step(fx.store_);
  }
  fx.final_loss_ = fx.reconstruction_mse(sequences);
  if (!(fx.final_loss_ <= cfg.loss_threshold)) {
    fx.warning_ = "reconstruction MSE " + format_double(fx.final_loss_) + " above threshold " +
                  format_double(cfg.loss_threshold);
  }
  return fx;
}

}  // namespace mdta2g
