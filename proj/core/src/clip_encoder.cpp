// SPDX-License-Identifier: Apache-2.0
#include "sct/clip_encoder.hpp"

#include <algorithm>
#include <cmath>

#include "sct/error.hpp"

namespace sct {

ClipEncoderParams::ClipEncoderParams(ParameterStore& store, const std::string& prefix, std::size_t frames,
                                     std::size_t in_dim, std::size_t dim, std::size_t mlp_dim, std::size_t n_blocks,
                                     std::size_t heads, std::size_t num_classes, double dropout_rate, Rng& rng)
    : dropout(dropout_rate) {
  if (n_blocks < 1) throw ConfigError(prefix + ": the clip encoder needs at least one block");
  if (num_classes < 1) throw ConfigError(prefix + ": num_classes must be positive");
  check_heads(dim, heads, prefix);
  frame_proj = store.add(prefix + ".frame_proj", {in_dim, dim}, Init::kWeight, rng);
  cls = store.add(prefix + ".cls", {dim}, Init::kEmbedding, rng);
  pos_embed = store.add(prefix + ".pos_embed", {frames + 1, dim}, Init::kEmbedding, rng);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    blocks.emplace_back(store, prefix + ".block" + std::to_string(b), dim, mlp_dim, heads, rng);
  }
  head_ln = LayerNormParams(store, prefix + ".head_ln", dim, rng);
  head = Linear(store, prefix + ".head", dim, num_classes, true, rng);
}

Tensor clip_encode(const Tensor& frame_features, const ClipEncoderParams& params, bool train, Rng* rng,
                   AttentionMap* last_attention) {
  if (frame_features.rank() != 2 || frame_features.dim(1) != params.frame_proj.dim(0)) {
    throw DimensionError("clip_encode: features " + to_string(frame_features.shape()) + " do not match E' " +
                         to_string(params.frame_proj.shape()));
  }
  const auto T = frame_features.dim(0);
  const auto D = params.cls.dim(0);
  if (params.pos_embed.dim(0) != T + 1) {
    throw ConfigError("clip encoder was built for " + std::to_string(params.pos_embed.dim(0) - 1) +
                      " frames, got " + std::to_string(T));
  }
  auto b = concat({reshape(params.cls, {1, D}), matmul(frame_features, params.frame_proj)}, 0);
  b = reshape(add(b, params.pos_embed), {1, T + 1, D});
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    std::vector<double> probs;
    const bool capture = last_attention && i + 1 == params.blocks.size();
    b = params.blocks[i](b, nullptr, capture ? &probs : nullptr);
    if (capture) *last_attention = {1, params.blocks[i].msa.heads, T + 1, std::move(probs)};
  }
  auto cls_row = params.head_ln(reshape(slice(b, 1, 0, 1), {1, D}));
  if (train && params.dropout > 0.0) {
    if (!rng) throw ContractError("clip_encode: training with dropout needs an rng");
    cls_row = sct::dropout(cls_row, params.dropout, true, *rng);
  }
  return reshape(params.head(cls_row), {params.head.weight.dim(1)});
}

std::vector<double> predict_probs(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (auto& v : p) z += (v = std::exp(v - mx));
  for (auto& v : p) v /= z;
  return p;
}

}  // namespace sct
