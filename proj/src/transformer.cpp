#include "mdta2g/transformer.hpp"

#include "mdta2g/errors.hpp"

#include <cmath>

namespace mdta2g {

namespace {
thread_local std::uint64_t g_score_elements = 0;
}

std::uint64_t attention_score_elements() { return g_score_elements; }
void reset_attention_score_elements() { g_score_elements = 0; }

ad::Var scaled_dot_product_attention(const ad::Var& q, const ad::Var& k, const ad::Var& v,
                                     const Mat& allowed) {
  g_score_elements += static_cast<std::uint64_t>(q.rows() * k.rows());
  const double s = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  ad::Var scores = ad::scale(ad::matmul_nt(q, k), s);
  return ad::matmul(ad::softmax_rows(scores, allowed), v);
}

ad::Var multi_head_self_attention(const ad::Var& x, const Linear& qkv, const Linear& out, int heads) {
  const auto width = x.cols();
  const auto head_dim = width / heads;
  ad::Var packed = qkv(x);
  std::vector<ad::Var> head_outputs;
  head_outputs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    ad::Var q = ad::slice_cols(packed, h * head_dim, head_dim);
    ad::Var k = ad::slice_cols(packed, width + h * head_dim, head_dim);
    ad::Var v = ad::slice_cols(packed, 2 * width + h * head_dim, head_dim);
    head_outputs.push_back(scaled_dot_product_attention(q, k, v));
  }
  ad::Var merged = heads == 1 ? head_outputs[0] : ad::concat_cols(head_outputs);
  return out(merged);
}

TransformerBlock TransformerBlock::create(ParameterStore& store, const std::string& prefix, int width,
                                          int heads, int mlp_ratio, Rng& rng) {
  if (heads <= 0 || width % heads != 0) {
    throw ConfigError("transformer block: width " + std::to_string(width) + " not divisible by heads " +
                      std::to_string(heads));
  }
  TransformerBlock b;
  b.heads = heads;
  b.norm1_gamma = store.add(prefix + ".norm1.gamma", Mat::Ones(1, width));
  b.norm1_beta = store.add(prefix + ".norm1.beta", Mat::Zero(1, width));
  b.qkv = Linear::create(store, prefix + ".attn.qkv", width, 3 * width, rng);
  b.attn_out = Linear::create(store, prefix + ".attn.out", width, width, rng);
  b.norm2_gamma = store.add(prefix + ".norm2.gamma", Mat::Ones(1, width));
  b.norm2_beta = store.add(prefix + ".norm2.beta", Mat::Zero(1, width));
  b.mlp_in = Linear::create(store, prefix + ".mlp.fc1", width, mlp_ratio * width, rng);
  b.mlp_out = Linear::create(store, prefix + ".mlp.fc2", mlp_ratio * width, width, rng);
  return b;
}

ad::Var TransformerBlock::operator()(const ad::Var& x) const {
  ad::Var h = ad::add(x, multi_head_self_attention(ad::layer_norm(x, norm1_gamma, norm1_beta), qkv,
                                                    attn_out, heads));
  ad::Var m = mlp_out(ad::gelu(mlp_in(ad::layer_norm(h, norm2_gamma, norm2_beta))));
  return ad::add(h, m);
}

}  // namespace mdta2g
