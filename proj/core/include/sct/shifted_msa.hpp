// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "sct/layers.hpp"
#include "sct/trace.hpp"

namespace sct {

struct ShiftedMsaLayer {
  LayerNormParams ln1, ln2;
  MultiHeadAttention msa;
  Mlp mlp;
};

// Per-frame CLS plus a stack of frame-shared attention layers whose keys
// are computed from frame t - shift_frames (cyclic).
struct ShiftedMsaParams {
  Tensor cls;  // [D]
  std::vector<ShiftedMsaLayer> layers;
  std::size_t shift_frames = 1;
  // Adds the input back after W_O. Off by default: the layer then reads
  // a = MSA(...), a' = MLP(LN(a)) + a.
  bool attn_residual = false;

  ShiftedMsaParams() = default;
  ShiftedMsaParams(ParameterStore& store, const std::string& prefix, std::size_t dim, std::size_t mlp_dim,
                   std::size_t heads, std::size_t n_layers, std::size_t shift_frames, bool attn_residual, Rng& rng);
};

// [T, N, D] -> [T, N + 1, D] with cls in slot 0 of every frame.
Tensor prepend_cls(const Tensor& frame_tokens, const Tensor& cls);

// batch: [T, N + 1, D]. Queries and values from frame t, keys from frame
// t - shift (mod T). Appends one AttentionMap per layer to `trace`.
Tensor shifted_msa(const Tensor& batch, const ShiftedMsaParams& params, std::vector<AttentionMap>* trace = nullptr);

// Same layers with keys from frame t itself.
Tensor standard_msa(const Tensor& batch, const ShiftedMsaParams& params, std::vector<AttentionMap>* trace = nullptr);

// Frame-index permutation feeding keys: result[t] = (t - shift) mod T.
std::vector<std::int64_t> shifted_frame_sources(std::size_t frames, std::size_t shift);

}  // namespace sct
