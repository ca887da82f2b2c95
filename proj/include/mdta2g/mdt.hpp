#pragma once

// Masked diffusion transformer denoiser.
//
// Training (masked path):  x_fuse -> drop masked rows -> encoder on the visible
// rows -> side-interpolator over the full-length sequence with a shared
// learnable token at masked slots -> masked shortcut -> decoder -> x0_hat.
// Inference and the "full" training path skip masking and the side-interpolator.

#include "mdta2g/conditions.hpp"
#include "mdta2g/diffusion.hpp"
#include "mdta2g/io.hpp"
#include "mdta2g/transformer.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mdta2g {

enum class InputMode { FullAndUnmasked, Full, Unmasked };

std::string to_string(InputMode mode);
InputMode input_mode_from_string(const std::string& text);

struct MdtConfig {
  std::string name = "custom";
  int width = 64;
  int encoder_depth = 2;
  int decoder_depth = 1;
  int si_blocks = 1;
  int heads = 4;
  int mlp_ratio = 4;
  double rho_base = 0.4;
  bool wider = true;
  bool shortcut = true;
  InputMode input_mode = InputMode::FullAndUnmasked;
  FusionConfig fusion;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  KeyValues to_key_values() const;
  static MdtConfig from_key_values(const KeyValues& kv);
  bool operator==(const MdtConfig& other) const;
};

/// XS/S/B/L toy variants. Fusion widths follow the model width.
MdtConfig make_variant(const std::string& name, const ConditionDims& dims = {}, int max_timestep = 1000);

struct MaskPlan {
  std::vector<std::uint8_t> mask;  // 1 = masked
  std::vector<int> unmasked_indices;
  double rho_effective = 0.0;      // masked fraction actually applied

  int tokens() const { return static_cast<int>(mask.size()); }
  int masked_count() const { return tokens() - static_cast<int>(unmasked_indices.size()); }
};

/// Masks exactly round(rho * n) tokens chosen by a partial Fisher-Yates
/// shuffle: for i in [0, k): j = i + rng.uniform_int(n - i); swap(idx[i], idx[j]).
/// The first k entries of the shuffled index list are masked. A ratio that
/// rounds to all tokens is rejected.
MaskPlan make_mask_plan(int tokens, double rho, Rng& rng);

/// Samples rho (Uniform[rho_base, rho_base + 0.2) when wider) and builds the plan.
/// A wider draw that would mask every token keeps one token visible.
MaskPlan sample_mask_plan(int tokens, double rho_base, bool wider, Rng& rng);

struct MaskedTokens {
  Mat visible;  // unmasked rows in original order
  MaskPlan plan;
};
MaskedTokens apply_mask(const Mat& x_fuse, double rho_base, bool wider, Rng& rng);

class MdtModel {
 public:
  MdtModel(const MdtConfig& config, std::uint64_t seed);
  MdtModel(MdtModel&&) = default;
  MdtModel& operator=(MdtModel&&) = default;
  MdtModel(const MdtModel&) = delete;
  MdtModel& operator=(const MdtModel&) = delete;

  /// Independent copy of the weights.
  MdtModel clone() const;

  const MdtConfig& config() const { return config_; }
  ParameterStore& parameters() { return store_; }
  const ParameterStore& parameters() const { return store_; }
  std::size_t parameter_count() const { return store_.scalar_count(); }

  FusionParams fusion;
  std::vector<TransformerBlock> encoder;
  std::vector<TransformerBlock> side_interpolator;
  ad::Var mask_token;  // 1 x width, shared by every masked slot
  std::vector<TransformerBlock> decoder;
  Linear output;

 private:
  MdtConfig config_;
  std::uint64_t seed_ = 0;
  ParameterStore store_;
};

ad::Var run_blocks(const ad::Var& x, std::span<const TransformerBlock> blocks);

/// fuse(...) plus sinusoidal frame positions: the token sequence fed to masking.
ad::Var fused_tokens(const MdtModel& model, const Mat& x_t, int t, const ConditionBundle& bundle);

ad::Var encode(const ad::Var& visible, const MdtModel& model);

/// x_I = SA(tokens with latent rows at unmasked slots and the mask token at
/// masked slots); returns (1 - MASK) x_u_full + MASK x_I when the shortcut is
/// enabled, otherwise x_I.
ad::Var side_interpolate(const ad::Var& latent, const MaskPlan& plan, const ad::Var& x_u_full,
                         const MdtModel& model);

ad::Var decode(const ad::Var& x_hat_u, const MdtModel& model);

/// Inference structure: decode(encode(tokens)).
ad::Var forward_full(const MdtModel& model, const ad::Var& tokens);
/// Masked structure for a fixed plan.
ad::Var forward_masked(const MdtModel& model, const ad::Var& tokens, const MaskPlan& plan);

enum class DenoiseMode { Inference, MaskedTrain };

/// x0 estimate without gradient recording. MaskedTrain draws its mask from rng.
Mat denoise(const MdtModel& model, const Mat& x_t, int t, const ConditionBundle& bundle,
            DenoiseMode mode = DenoiseMode::Inference, Rng* rng = nullptr);

/// Inference-mode denoiser bound to a model (model must outlive it).
Denoiser make_denoiser(const MdtModel& model);

}  // namespace mdta2g
