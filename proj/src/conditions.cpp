#include "mdta2g/conditions.hpp"

#include "mdta2g/errors.hpp"

#include <cmath>

namespace mdta2g {

namespace {

void check_onehot(const Vec& v, const char* what) {
  int ones = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] == 1.0) {
      ++ones;
    } else if (v[i] != 0.0) {
      throw std::invalid_argument(std::string(what) + " must contain only 0/1 entries");
    }
  }
  if (ones > 1) throw std::invalid_argument(std::string(what) + " has more than one hot entry");
}

ad::Var row_constant(const Vec& v) { return ad::constant(Mat(v.transpose())); }

}  // namespace

void ConditionBundle::validate(int frames) const {
  if (audio.rows() != frames) throw std::invalid_argument("ConditionBundle: audio frame count mismatch");
  if (text.rows() != frames) throw std::invalid_argument("ConditionBundle: text frame count mismatch");
  check_onehot(id_onehot, "id_onehot");
  check_onehot(emotion_onehot, "emotion_onehot");
}

FusionWidths FusionWidths::for_model_width(int d) {
  if (d <= 0 || d % 16 != 0) throw ConfigError("model width must be a positive multiple of 16");
  const int unit = d / 16;
  return FusionWidths{8 * unit, 4 * unit, 2 * unit, unit, unit};
}

void FusionConfig::validate() const {
  if (dims.gesture_dim <= 0 || dims.audio_dim <= 0 || dims.text_dim <= 0 || dims.n_speakers <= 0 ||
      dims.n_emotions <= 0) {
    throw ConfigError("fusion: all input dims must be positive");
  }
  if (widths.gesture <= 0 || widths.audio <= 0 || widths.text <= 0 || widths.id <= 0 || widths.emotion <= 0) {
    throw ConfigError("fusion: all embedded widths must be positive");
  }
  if (widths.id != widths.emotion) {
    throw ConfigError("fusion: id and emotion widths must match (both receive the time embedding)");
  }
  if (window_size < 1) throw ConfigError("fusion: window_size must be >= 1");
  if (max_timestep < 1) throw ConfigError("fusion: max_timestep must be >= 1");
}

FusionParams FusionParams::create(const FusionConfig& config, ParameterStore& store, Rng& rng,
                                  const std::string& prefix) {
  config.validate();
  FusionParams p;
  p.config = config;
  const auto& d = config.dims;
  const auto& w = config.widths;
  p.gesture_in = Linear::create(store, prefix + ".gesture_in", d.gesture_dim, w.gesture, rng);
  p.speaker = Linear::create(store, prefix + ".speaker", d.n_speakers, w.id, rng);
  p.emotion = Linear::create(store, prefix + ".emotion", d.n_emotions, w.emotion, rng);
  p.text = Linear::create(store, prefix + ".text", d.text_dim, w.text, rng);
  p.audio = Linear::create(store, prefix + ".audio", d.audio_dim, w.audio, rng);
  p.time_mlp.hidden = Linear::create(store, prefix + ".time_mlp.fc1", w.id, 4 * w.id, rng);
  p.time_mlp.output = Linear::create(store, prefix + ".time_mlp.fc2", 4 * w.id, w.id, rng);
  const int total = w.total();
  p.attention.query = Linear::create(store, prefix + ".attn.query", total, total, rng);
  p.attention.key = Linear::create(store, prefix + ".attn.key", total, total, rng);
  p.attention.value.weight = store.add(prefix + ".attn.value.weight", Mat::Identity(total, total));
  p.attention.value.bias = store.add(prefix + ".attn.value.bias", Mat::Zero(1, total));
  return p;
}

Vec sinusoidal_encoding(double position, int width) {
  Vec pe(width);
  for (int i = 0; i < width; ++i) {
    const int pair = i / 2;
    const double freq = std::pow(10000.0, -2.0 * pair / static_cast<double>(width));
    pe[i] = (i % 2 == 0) ? std::sin(position * freq) : std::cos(position * freq);
  }
  return pe;
}

Mat frame_position_encoding(int frames, int width) {
  Mat out(frames, width);
  for (int f = 0; f < frames; ++f) out.row(f) = sinusoidal_encoding(f, width).transpose();
  return out;
}

ad::Var embed_time_var(int t, const FusionParams& params) {
  if (t < 1 || t > params.config.max_timestep) {
    throw std::invalid_argument("embed_time: step " + std::to_string(t) + " outside [1, " +
                                std::to_string(params.config.max_timestep) + "]");
  }
  ad::Var pe = row_constant(sinusoidal_encoding(t, params.config.widths.id));
  ad::Var h = ad::silu(params.time_mlp.hidden(pe));
  return ad::add(pe, params.time_mlp.output(h));
}

TimeEmbedding embed_time(int t, const FusionParams& params) {
  ad::NoGradGuard guard;
  ad::Var v = embed_time_var(t, params);
  return TimeEmbedding{t, Vec(v.value().row(0).transpose())};
}

ConditionBundle condition_dropout(const ConditionBundle& bundle, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("condition_dropout: p must be in [0, 1)");
  ConditionBundle out = bundle;
  // Both draws always happen so the stream position does not depend on p.
  const bool drop_id = rng.bernoulli(p);
  const bool drop_emotion = rng.bernoulli(p);
  if (drop_id) out.id_onehot.setZero();
  if (drop_emotion) out.emotion_onehot.setZero();
  return out;
}

Mat local_window_mask(int frames, int window) {
  if (window < 1) throw std::invalid_argument("window size must be >= 1");
  Mat allowed = Mat::Zero(frames, frames);
  for (int i = 0; i < frames; ++i) {
    for (int j = 0; j < frames; ++j) allowed(i, j) = (i / window == j / window) ? 1.0 : 0.0;
  }
  return allowed;
}

ad::Var cross_local_attention(const ad::Var& x, int window_size, const CrossLocalAttention& weights) {
  if (window_size < 1) throw std::invalid_argument("cross_local_attention: window size must be >= 1");
  const int frames = static_cast<int>(x.rows());
  const Mat allowed = window_size >= frames ? Mat() : local_window_mask(frames, window_size);
  return scaled_dot_product_attention(weights.query(x), weights.key(x), weights.value(x), allowed);
}

ad::Var fuse_concat(const Mat& x_t, const ConditionBundle& bundle, const ad::Var& t_hat,
                    const FusionParams& params) {
  const auto& dims = params.config.dims;
  const auto frames = x_t.rows();
  if (x_t.cols() != dims.gesture_dim) {
    throw ConfigError("fuse: gesture width " + std::to_string(x_t.cols()) + " != configured " +
                      std::to_string(dims.gesture_dim));
  }
  if (bundle.audio.rows() != frames || bundle.text.rows() != frames) {
    throw ConfigError("fuse: condition streams must have " + std::to_string(frames) + " frames");
  }
  if (bundle.audio.cols() != dims.audio_dim) throw ConfigError("fuse: audio width mismatch");
  if (bundle.text.cols() != dims.text_dim) throw ConfigError("fuse: text width mismatch");
  if (bundle.id_onehot.size() != dims.n_speakers) throw ConfigError("fuse: speaker one-hot width mismatch");
  if (bundle.emotion_onehot.size() != dims.n_emotions) throw ConfigError("fuse: emotion one-hot width mismatch");
  if (t_hat.rows() != 1 || t_hat.cols() != params.config.widths.id) {
    throw ConfigError("fuse: time embedding width mismatch");
  }

  ad::Var speaker = ad::add(params.speaker(row_constant(bundle.id_onehot)), t_hat);
  ad::Var emotion = ad::add(params.emotion(row_constant(bundle.emotion_onehot)), t_hat);
  const std::vector<ad::Var> parts = {
      params.gesture_in(ad::constant(x_t)),
      ad::repeat_rows(speaker, frames),
      ad::repeat_rows(emotion, frames),
      params.text(ad::constant(bundle.text)),
      params.audio(ad::constant(bundle.audio)),
  };
  return ad::concat_cols(parts);
}

ad::Var fuse(const Mat& x_t, const ConditionBundle& bundle, const ad::Var& t_hat, const FusionParams& params) {
  return cross_local_attention(fuse_concat(x_t, bundle, t_hat, params), params.config.window_size,
                               params.attention);
}

}  // namespace mdta2g
