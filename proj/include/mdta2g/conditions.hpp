#pragma once

// Multi-modal condition fusion: per-stream embeddings, the diffusion-step
// embedding, condition dropout and windowed (cross-local) attention over frames.

#include "mdta2g/params.hpp"
#include "mdta2g/transformer.hpp"

namespace mdta2g {

struct ConditionBundle {
  Mat audio;           // F x audio_dim
  Mat text;            // F x text_dim
  Vec id_onehot;       // speaker count; all zero when dropped
  Vec emotion_onehot;  // emotion count; all zero when dropped

  int frames() const { return static_cast<int>(audio.rows()); }
  /// Checks frame counts against `frames` and the one-hot (or all-zero) shape of the labels.
  void validate(int frames) const;
  bool operator==(const ConditionBundle&) const = default;
};

/// Input widths of every stream the fusion consumes.
struct ConditionDims {
  int gesture_dim = 75 * 9;
  int audio_dim = 8;
  int text_dim = 8;
  int n_speakers = 8;
  int n_emotions = 8;

  bool operator==(const ConditionDims&) const = default;
};

/// Embedded widths per stream; they sum to the model width.
struct FusionWidths {
  int gesture = 128;
  int audio = 64;
  int text = 32;
  int id = 16;
  int emotion = 16;

  int total() const { return gesture + audio + text + id + emotion; }
  /// Default widths rescaled to model width d (d must be a multiple of 16).
  static FusionWidths for_model_width(int d);
  bool operator==(const FusionWidths&) const = default;
};

struct FusionConfig {
  ConditionDims dims;
  FusionWidths widths;
  int window_size = 8;
  int max_timestep = 1000;  // T; valid steps are 1..T

  void validate() const;
};

struct TimeMlp {
  Linear hidden;  // width -> 4 width
  Linear output;  // 4 width -> width; residual around the pair
};

struct CrossLocalAttention {
  Linear query;
  Linear key;
  Linear value;
};

struct FusionParams {
  FusionConfig config;
  Linear gesture_in;
  Linear speaker;
  Linear emotion;
  Linear text;
  Linear audio;
  TimeMlp time_mlp;
  CrossLocalAttention attention;

  /// Registers parameters under `prefix`. The value projection of the
  /// attention starts at the identity so the fused streams pass through.
  static FusionParams create(const FusionConfig& config, ParameterStore& store, Rng& rng,
                             const std::string& prefix = "fuse");
};

struct TimeEmbedding {
  int t = 0;
  Vec vector;
};

/// Standard transformer encoding: [sin(p w_0), cos(p w_0), sin(p w_1), ...],
/// w_i = 10000^(-2i/width).
Vec sinusoidal_encoding(double position, int width);
/// Rows are sinusoidal_encoding(frame, width) for frame = 0..frames-1.
Mat frame_position_encoding(int frames, int width);

/// t_hat = PE(t) + MLP(PE(t)) as a 1 x width row, differentiable.
ad::Var embed_time_var(int t, const FusionParams& params);
TimeEmbedding embed_time(int t, const FusionParams& params);

ConditionBundle condition_dropout(const ConditionBundle& bundle, double p, Rng& rng);

/// allowed(i, j) = 1 iff floor(i / window) == floor(j / window).
Mat local_window_mask(int frames, int window);

/// Single-head self-attention over frames restricted to non-overlapping windows.
ad::Var cross_local_attention(const ad::Var& x, int window_size, const CrossLocalAttention& weights);

/// Concat[E_g(x_t), E_s(x_s) + t_hat, E_e(x_e) + t_hat, E_txt(x_txt), E_a(x_a)].
ad::Var fuse_concat(const Mat& x_t, const ConditionBundle& bundle, const ad::Var& t_hat,
                    const FusionParams& params);
/// cross_local_attention(fuse_concat(...)).
ad::Var fuse(const Mat& x_t, const ConditionBundle& bundle, const ad::Var& t_hat, const FusionParams& params);

}  // namespace mdta2g
