#include "mdta2g/mdt.hpp"

#include "mdta2g/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mdta2g {

std::string to_string(InputMode mode) {
  switch (mode) {
    case InputMode::FullAndUnmasked: return "full+unmasked";
    case InputMode::Full: return "full";
    case InputMode::Unmasked: return "unmasked";
  }
  return "full+unmasked";
}

InputMode input_mode_from_string(const std::string& text) {
  if (text == "full+unmasked") return InputMode::FullAndUnmasked;
  if (text == "full") return InputMode::Full;
  if (text == "unmasked") return InputMode::Unmasked;
  throw ConfigError("input_mode: expected full+unmasked, full or unmasked, got '" + text + "'");
}

void MdtConfig::validate() const {
  if (width <= 0) throw ConfigError("width must be positive");
  if (heads <= 0 || width % heads != 0) throw ConfigError("heads must divide width");
  if (encoder_depth < 1) throw ConfigError("encoder_depth must be >= 1");
  if (decoder_depth < 0) throw ConfigError("decoder_depth must be >= 0");
  if (decoder_depth >= encoder_depth) throw ConfigError("decoder_depth must be smaller than encoder_depth");
  if (si_blocks < 0) throw ConfigError("si_blocks must be >= 0");
  if (mlp_ratio < 1) throw ConfigError("mlp_ratio must be >= 1");
  if (!(rho_base >= 0.0 && rho_base <= 0.8)) throw ConfigError("rho_base must lie in [0, 0.8]");
  fusion.validate();
  if (fusion.widths.total() != width) {
    throw ConfigError("fusion widths sum to " + std::to_string(fusion.widths.total()) + ", expected width " +
                      std::to_string(width));
  }
}

KeyValues MdtConfig::to_key_values() const {
  const auto& d = fusion.dims;
  const auto& w = fusion.widths;
  return {{"mdt.name", name},
          {"mdt.width", std::to_string(width)},
          {"mdt.encoder_depth", std::to_string(encoder_depth)},
          {"mdt.decoder_depth", std::to_string(decoder_depth)},
          {"mdt.si_blocks", std::to_string(si_blocks)},
          {"mdt.heads", std::to_string(heads)},
          {"mdt.mlp_ratio", std::to_string(mlp_ratio)},
          {"mdt.rho_base", format_double(rho_base)},
          {"mdt.wider", wider ? "1" : "0"},
          {"mdt.shortcut", shortcut ? "1" : "0"},
          {"mdt.input_mode", to_string(input_mode)},
          {"fusion.gesture_dim", std::to_string(d.gesture_dim)},
          {"fusion.audio_dim", std::to_string(d.audio_dim)},
          {"fusion.text_dim", std::to_string(d.text_dim)},
          {"fusion.n_speakers", std::to_string(d.n_speakers)},
          {"fusion.n_emotions", std::to_string(d.n_emotions)},
          {"fusion.width_gesture", std::to_string(w.gesture)},
          {"fusion.width_audio", std::to_string(w.audio)},
          {"fusion.width_text", std::to_string(w.text)},
          {"fusion.width_id", std::to_string(w.id)},
          {"fusion.width_emotion", std::to_string(w.emotion)},
          {"fusion.window_size", std::to_string(fusion.window_size)},
          {"fusion.max_timestep", std::to_string(fusion.max_timestep)}};
}

MdtConfig MdtConfig::from_key_values(const KeyValues& kv) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("checkpoint config is missing '" + key + "'");
    return it->second;
  };
  auto get_int = [&](const std::string& key) { return std::stoi(get(key)); };
  MdtConfig c;
  c.name = get("mdt.name");
  c.width = get_int("mdt.width");
  c.encoder_depth = get_int("mdt.encoder_depth");
  c.decoder_depth = get_int("mdt.decoder_depth");
  c.si_blocks = get_int("mdt.si_blocks");
  c.heads = get_int("mdt.heads");
  c.mlp_ratio = get_int("mdt.mlp_ratio");
  c.rho_base = std::stod(get("mdt.rho_base"));
  c.wider = get("mdt.wider") == "1";
  c.shortcut = get("mdt.shortcut") == "1";
  c.input_mode = input_mode_from_string(get("mdt.input_mode"));
  auto& d = c.fusion.dims;
  d.gesture_dim = get_int("fusion.gesture_dim");
  d.audio_dim = get_int("fusion.audio_dim");
  d.text_dim = get_int("fusion.text_dim");
  d.n_speakers = get_int("fusion.n_speakers");
  d.n_emotions = get_int("fusion.n_emotions");
  auto& w = c.fusion.widths;
  w.gesture = get_int("fusion.width_gesture");
  w.audio = get_int("fusion.width_audio");
  w.text = get_int("fusion.width_text");
  w.id = get_int("fusion.width_id");
  w.emotion = get_int("fusion.width_emotion");
  c.fusion.window_size = get_int("fusion.window_size");
  c.fusion.max_timestep = get_int("fusion.max_timestep");
  c.validate();
  return c;
}

bool MdtConfig::operator==(const MdtConfig& o) const { return to_key_values() == o.to_key_values(); }

MdtConfig make_variant(const std::string& name, const ConditionDims& dims, int max_timestep) {
  MdtConfig c;
  c.name = name;
  if (name == "XS") {
    c.width = 64, c.encoder_depth = 2, c.decoder_depth = 1, c.heads = 4;
  } else if (name == "S") {
    c.width = 128, c.encoder_depth = 4, c.decoder_depth = 2, c.heads = 4;
  } else if (name == "B") {
    c.width = 256, c.encoder_depth = 8, c.decoder_depth = 2, c.heads = 8;
  } else if (name == "L") {
    c.width = 384, c.encoder_depth = 12, c.decoder_depth = 2, c.heads = 8;
  } else {
    throw ConfigError("variant: unknown name '" + name + "' (expected XS, S, B or L)");
  }
  c.si_blocks = 1;
  c.rho_base = 0.4;
  c.wider = true;
  c.shortcut = true;
  c.fusion.dims = dims;
  c.fusion.widths = FusionWidths::for_model_width(c.width);
  c.fusion.max_timestep = max_timestep;
  c.validate();
  return c;
}

MaskPlan make_mask_plan(int tokens, double rho, Rng& rng) {
  if (tokens < 2) throw std::invalid_argument("apply_mask: need at least 2 tokens");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("apply_mask: rho must lie in [0, 1)");
  const int masked = static_cast<int>(std::lround(rho * tokens));
  if (masked >= tokens) {
    throw std::invalid_argument("apply_mask: rho " + format_double(rho) + " masks all " + std::to_string(tokens) +
                                " tokens; at least one must stay visible");
  }
  std::vector<int> idx(static_cast<std::size_t>(tokens));
  for (int i = 0; i < tokens; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < masked; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.uniform_int(static_cast<std::uint64_t>(tokens - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  MaskPlan plan;
  plan.mask.assign(static_cast<std::size_t>(tokens), 0);
  for (int i = 0; i < masked; ++i) plan.mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;
  for (int i = 0; i < tokens; ++i) {
    if (!plan.mask[static_cast<std::size_t>(i)]) plan.unmasked_indices.push_back(i);
  }
  plan.rho_effective = static_cast<double>(masked) / tokens;
  return plan;
}

MaskPlan sample_mask_plan(int tokens, double rho_base, bool wider, Rng& rng) {
  if (!(rho_base >= 0.0 && rho_base <= 0.8)) throw std::invalid_argument("apply_mask: rho_base must lie in [0, 0.8]");
  double rho = rho_base;
  if (wider) {
    rho = rng.uniform(rho_base, rho_base + 0.2);
    if (std::lround(rho * tokens) >= tokens) rho = (tokens - 1.0) / tokens;
  }
  return make_mask_plan(tokens, rho, rng);
}

MaskedTokens apply_mask(const Mat& x_fuse, double rho_base, bool wider, Rng& rng) {
  MaskedTokens out;
  out.plan = sample_mask_plan(static_cast<int>(x_fuse.rows()), rho_base, wider, rng);
  out.visible.resize(static_cast<Eigen::Index>(out.plan.unmasked_indices.size()), x_fuse.cols());
  for (std::size_t k = 0; k < out.plan.unmasked_indices.size(); ++k) {
    out.visible.row(static_cast<Eigen::Index>(k)) = x_fuse.row(out.plan.unmasked_indices[k]);
  }
  return out;
}

MdtModel::MdtModel(const MdtConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  config_.validate();
  Rng rng(seed);
  fusion = FusionParams::create(config_.fusion, store_, rng);
  for (int i = 0; i < config_.encoder_depth; ++i) {
    encoder.push_back(TransformerBlock::create(store_, "encoder." + std::to_string(i), config_.width, config_.heads,
                                               config_.mlp_ratio, rng));
  }
  for (int i = 0; i < config_.si_blocks; ++i) {
    side_interpolator.push_back(TransformerBlock::create(store_, "side_interpolator." + std::to_string(i),
                                                         config_.width, config_.heads, config_.mlp_ratio, rng));
  }
  mask_token = store_.add("side_interpolator.mask_token", trunc_normal(1, config_.width, 0.02, rng));
  for (int i = 0; i < config_.decoder_depth; ++i) {
    decoder.push_back(TransformerBlock::create(store_, "decoder." + std::to_string(i), config_.width, config_.heads,
                                               config_.mlp_ratio, rng));
  }
  output = Linear::create(store_, "output", config_.width, config_.fusion.dims.gesture_dim, rng);
}

MdtModel MdtModel::clone() const {
  MdtModel copy(config_, seed_);
  copy.store_.copy_values_from(store_);
  return copy;
}

ad::Var run_blocks(const ad::Var& x, std::span<const TransformerBlock> blocks) {
  ad::Var h = x;
  for (const auto& b : blocks) h = b(h);
  return h;
}

ad::Var fused_tokens(const MdtModel& model, const Mat& x_t, int t, const ConditionBundle& bundle) {
  ad::Var fused = fuse(x_t, bundle, embed_time_var(t, model.fusion), model.fusion);
  return ad::add(fused, ad::constant(frame_position_encoding(static_cast<int>(x_t.rows()), model.config().width)));
}

ad::Var encode(const ad::Var& visible, const MdtModel& model) { return run_blocks(visible, model.encoder); }

ad::Var side_interpolate(const ad::Var& latent, const MaskPlan& plan, const ad::Var& x_u_full,
                         const MdtModel& model) {
  const Eigen::Index n = x_u_full.rows();
  if (plan.tokens() != n || static_cast<Eigen::Index>(plan.unmasked_indices.size()) != latent.rows()) {
    throw std::invalid_argument("side_interpolate: mask plan does not match token counts");
  }
  ad::Var placed = ad::place_rows(latent, plan.unmasked_indices, n);
  ad::Var filled = ad::select_rows(placed, ad::repeat_rows(model.mask_token, n), plan.mask);
  ad::Var interpolated = run_blocks(filled, model.side_interpolator);
  if (!model.config().shortcut) return interpolated;
  return ad::select_rows(x_u_full, interpolated, plan.mask);
}

ad::Var decode(const ad::Var& x_hat_u, const MdtModel& model) {
  return model.output(run_blocks(x_hat_u, model.decoder));
}

ad::Var forward_full(const MdtModel& model, const ad::Var& tokens) { return decode(encode(tokens, model), model); }

ad::Var forward_masked(const MdtModel& model, const ad::Var& tokens, const MaskPlan& plan) {
  ad::Var visible = ad::gather_rows(tokens, plan.unmasked_indices);
  ad::Var latent = encode(visible, model);
  return decode(side_interpolate(latent, plan, tokens, model), model);
}

Mat denoise(const MdtModel& model, const Mat& x_t, int t, const ConditionBundle& bundle, DenoiseMode mode,
            Rng* rng) {
  ad::NoGradGuard guard;
  ad::Var tokens = fused_tokens(model, x_t, t, bundle);
  if (mode == DenoiseMode::Inference) return forward_full(model, tokens).value();
  if (!rng) throw std::invalid_argument("denoise: masked-train mode needs an rng");
  const MaskPlan plan = sample_mask_plan(static_cast<int>(x_t.rows()), model.config().rho_base,
                                         model.config().wider, *rng);
  return forward_masked(model, tokens, plan).value();
}

Denoiser make_denoiser(const MdtModel& model) {
  return [&model](const Mat& x_t, int t, const ConditionBundle& cond) {
    return denoise(model, x_t, t, cond, DenoiseMode::Inference);
  };
}

}  // namespace mdta2g
