// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sct/tensor.hpp"

namespace sct {

// Key validity per mask row. Attention batch b uses row b / (B / rows), so a
// mask built per chunk applies unchanged to every head of that chunk.
struct KeyMask {
  std::size_t rows = 0;
  std::size_t keys = 0;
  std::vector<std::uint8_t> valid;  // rows * keys, 1 = attendable

  bool allows(std::size_t row, std::size_t key) const { return valid[row * keys + key] != 0; }
};

struct AttentionOptions {
  double scale = 1.0;
  const KeyMask* key_mask = nullptr;
  // When both are set, a key whose id equals the query id scores a fixed
  // -1e5 instead of q.k, so a token only attends to itself when nothing
  // else is available. Layout: [B * Sq] and [B * Sk].
  const std::vector<std::int64_t>* query_ids = nullptr;
  const std::vector<std::int64_t>* key_ids = nullptr;
  // Append log-sum-exp of the (masked, scaled) scores as an extra last column.
  bool with_lse = false;
  // Receives a detached copy of the attention probabilities [B, Sq, Sk].
  std::vector<double>* probs_out = nullptr;
};

// softmax(scale * q k^T) v for q [B, Sq, d], k [B, Sk, d], v [B, Sk, dv].
// Returns [B, Sq, dv], or [B, Sq, dv + 1] with the log-sum-exp column.
// Masked keys get weight exactly 0. A query row with no valid key yields a
// zero output and a log-sum-exp of -1e30.
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionOptions& options);

inline constexpr double kSelfScore = -1e5;
inline constexpr double kEmptyRowLse = -1e30;

}  // namespace sct
