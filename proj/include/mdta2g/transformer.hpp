#pragma once

#include "mdta2g/params.hpp"

#include <cstdint>

namespace mdta2g {

/// Number of attention-score entries materialized on this thread since the
/// last reset. Lets tests observe that masked encoding costs N_hat^2, not N^2.
std::uint64_t attention_score_elements();
void reset_attention_score_elements();

/// softmax(q k^T / sqrt(dk) restricted to `allowed`) v.
ad::Var scaled_dot_product_attention(const ad::Var& q, const ad::Var& k, const ad::Var& v,
                                     const Mat& allowed = Mat());

/// Pre-LayerNorm block: x + MHSA(LN(x)), then x + MLP(LN(x)) with a GELU MLP.
struct TransformerBlock {
  ad::Var norm1_gamma, norm1_beta;
  Linear qkv;
  Linear attn_out;
  ad::Var norm2_gamma, norm2_beta;
  Linear mlp_in;
  Linear mlp_out;
  int heads = 1;

  static TransformerBlock create(ParameterStore& store, const std::string& prefix, int width, int heads,
                                 int mlp_ratio, Rng& rng);
  ad::Var operator()(const ad::Var& x) const;
};

ad::Var multi_head_self_attention(const ad::Var& x, const Linear& qkv, const Linear& out, int heads);

}  // namespace mdta2g
