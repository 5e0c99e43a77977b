// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace sct {

// Attention probabilities of one layer, laid out [frames, heads, tokens, tokens].
struct AttentionMap {
  std::size_t frames = 0, heads = 0, tokens = 0;
  std::vector<double> weights;

  double at(std::size_t f, std::size_t h, std::size_t i, std::size_t j) const {
    return weights[((f * heads + h) * tokens + i) * tokens + j];
  }
};

// Shifted-MSA layers of one stage. Token 0 is the frame CLS; tokens 1..N
// cover a grid_rows x grid_cols grid in row-major order.
struct StageTrace {
  std::size_t grid_rows = 0, grid_cols = 0;
  std::vector<AttentionMap> layers;
};

struct AttentionTrace {
  std::vector<StageTrace> stages;
  // Last clip-encoder block, frames = 1, tokens = T + 1 (global CLS first).
  AttentionMap clip;
};

}  // namespace sct
