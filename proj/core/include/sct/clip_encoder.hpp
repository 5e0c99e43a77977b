// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "sct/layers.hpp"
#include "sct/trace.hpp"

namespace sct {

struct ClipEncoderParams {
  Tensor frame_proj;  // E' [D_final, D']
  Tensor cls;         // [D']
  Tensor pos_embed;   // [T + 1, D']
  std::vector<TransformerBlock> blocks;
  LayerNormParams head_ln;
  Linear head;  // D' -> num_classes
  double dropout = 0.0;

  ClipEncoderParams() = default;
  ClipEncoderParams(ParameterStore& store, const std::string& prefix, std::size_t frames, std::size_t in_dim,
                    std::size_t dim, std::size_t mlp_dim, std::size_t n_blocks, std::size_t heads,
                    std::size_t num_classes, double dropout, Rng& rng);
};

// frame_features: [T, D_final]. Returns logits [num_classes] read from the
// global CLS row. `rng` is only used when train is true and dropout > 0.
// `last_attention` receives the final block's attention (frames = 1).
Tensor clip_encode(const Tensor& frame_features, const ClipEncoderParams& params, bool train, Rng* rng = nullptr,
                   AttentionMap* last_attention = nullptr);

// Softmax of a logit vector.
std::vector<double> predict_probs(std::span<const double> logits);

}  // namespace sct
