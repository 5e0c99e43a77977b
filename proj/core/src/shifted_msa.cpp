// SPDX-License-Identifier: Apache-2.0
#include "sct/shifted_msa.hpp"

#include <cmath>

#include "sct/error.hpp"

namespace sct {

ShiftedMsaParams::ShiftedMsaParams(ParameterStore& store, const std::string& prefix, std::size_t dim,
                                   std::size_t mlp_dim, std::size_t heads, std::size_t n_layers,
                                   std::size_t shift, bool residual, Rng& rng)
    : cls(store.add(prefix + ".cls", {dim}, Init::kEmbedding, rng)), shift_frames(shift), attn_residual(residual) {
  check_heads(dim, heads, prefix);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto p = prefix + ".layer" + std::to_string(l);
    ShiftedMsaLayer layer;
    layer.ln1 = LayerNormParams(store, p + ".ln1", dim, rng);
    layer.msa = MultiHeadAttention(store, p + ".msa", dim, heads, rng);
    layer.ln2 = LayerNormParams(store, p + ".ln2", dim, rng);
    layer.mlp = Mlp(store, p + ".mlp", dim, mlp_dim, rng);
    layers.push_back(std::move(layer));
  }
}

Tensor prepend_cls(const Tensor& frame_tokens, const Tensor& cls) {
  if (frame_tokens.rank() != 3 || cls.rank() != 1 || cls.dim(0) != frame_tokens.dim(2)) {
    throw DimensionError("prepend_cls: tokens " + to_string(frame_tokens.shape()) + " vs cls " +
                         to_string(cls.shape()));
  }
  const auto T = frame_tokens.dim(0), D = cls.dim(0);
  auto slot = add(Tensor::zeros({T, 1, D}), reshape(cls, {1, 1, D}));
  return concat({slot, frame_tokens}, 1);
}

std::vector<std::int64_t> shifted_frame_sources(std::size_t frames, std::size_t shift) {
  std::vector<std::int64_t> src(frames);
  for (std::size_t t = 0; t < frames; ++t) src[t] = static_cast<std::int64_t>((t + frames - shift % frames) % frames);
  return src;
}

namespace {

Tensor run_layers(const Tensor& batch, const ShiftedMsaParams& params, std::size_t shift,
                  std::vector<AttentionMap>* trace) {
  if (batch.rank() != 3) throw DimensionError("shifted MSA expects [T, N+1, D], got " + to_string(batch.shape()));
  const auto T = batch.dim(0), S = batch.dim(1), D = batch.dim(2);
  // A single frame is its own predecessor, so any shift is the identity there.
  if (T > 1 && shift >= T) {
    throw ConfigError("shift_frames " + std::to_string(shift) + " must be smaller than the frame count " +
                      std::to_string(T));
  }
  const auto src = shifted_frame_sources(T, shift);
  Tensor x = batch;
  for (const auto& layer : params.layers) {
    const auto heads = layer.msa.heads;
    const auto dh = D / heads;
    auto normed = layer.ln1(x);
    Tensor keyed = normed;
    if (shift != 0) keyed = reshape(gather_rows(reshape(normed, {T, S * D}), src), {T, S, D});
    auto q = split_heads(matmul(normed, layer.msa.wq), heads);
    auto k = split_heads(matmul(keyed, layer.msa.wk), heads);
    auto v = split_heads(matmul(normed, layer.msa.wv), heads);
    AttentionOptions opt;
    opt.scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> probs;
    if (trace) opt.probs_out = &probs;
    auto a = matmul(merge_heads(scaled_dot_attention(q, k, v, opt), heads), layer.msa.wo);
    if (params.attn_residual) a = add(a, x);
    x = add(layer.mlp(layer.ln2(a)), a);
    if (trace) trace->push_back({T, heads, S, std::move(probs)});
  }
  return x;
}

}  // namespace

Tensor shifted_msa(const Tensor& batch, const ShiftedMsaParams& params, std::vector<AttentionMap>* trace) {
  return run_layers(batch, params, params.shift_frames, trace);
}

Tensor standard_msa(const Tensor& batch, const ShiftedMsaParams& params, std::vector<AttentionMap>* trace) {
  return run_layers(batch, params, 0, trace);
}

}  // namespace sct
