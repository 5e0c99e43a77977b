// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sct/attention_kernel.hpp"
#include "sct/layers.hpp"

namespace sct {

// Knobs of the angular-LSH attention. Zero buckets means "derive from the
// sequence length": 2 * ceil(S / chunk_size) rounded up to a power of two.
struct LshConfig {
  std::size_t n_buckets = 0;
  std::size_t n_rounds = 4;
  std::size_t chunk_size = 64;
  bool attend_previous_chunk = true;
  bool include_self = true;
  std::uint64_t seed = 0;

  void validate() const;
};

std::size_t resolve_buckets(const LshConfig& cfg, std::size_t seq_len);
// Sorted-chunk length actually used: chunk_size clamped to the sequence.
std::size_t effective_chunk(const LshConfig& cfg, std::size_t seq_len);

// Bucket of each row of `vectors` ([count, dim], row-major):
// argmax over [xR; -xR] with R ~ N(0, 1) of shape [dim, n_buckets / 2] drawn
// from (seed, round). n_buckets == 1 maps everything to bucket 0.
std::vector<int> angular_lsh_hash(std::span<const double> vectors, std::size_t count, std::size_t dim,
                                  std::size_t n_buckets, std::uint64_t seed, std::size_t round);
// Tensor form for [S, D] inputs, bucket count resolved from cfg and S.
std::vector<int> angular_lsh_hash(const Tensor& vectors, const LshConfig& cfg, std::size_t round);

// Stable sort of positions by bucket id: result[i] is the original position
// of the i-th sorted token.
std::vector<std::int64_t> bucket_sort_permutation(const std::vector<int>& buckets);
std::vector<std::int64_t> invert_permutation(const std::vector<std::int64_t>& perm);

// Sorted layout of one sequence for one hashing round.
struct LshRoundPlan {
  std::vector<int> buckets;
  std::vector<std::int64_t> order;  // sorted slot -> original position, -1 past the end
  std::vector<std::int64_t> slot;   // original position -> sorted slot
};

struct LshPlan {
  std::size_t seq_len = 0, chunk_size = 0, n_chunks = 0, n_buckets = 0;
  bool attend_previous = true;
  std::vector<LshRoundPlan> rounds;

  std::size_t keys_per_chunk() const { return chunk_size * (attend_previous && n_chunks > 1 ? 2 : 1); }
  // Sorted chunk whose keys chunk c also sees, or -1.
  std::int64_t previous_chunk(std::size_t c) const;
  // Whether query i may attend key j in the given round.
  bool attends(std::size_t round, std::size_t i, std::size_t j) const;
};

// Hashes one sequence ([S, dh] shared query/key vectors) for every round.
LshPlan plan_lsh(std::span<const double> qk, std::size_t seq_len, std::size_t dim, const LshConfig& cfg);

// Multi-round LSH attention kernel over qk/v [B, S, dh] with unit-normalized
// keys. Each token attends its own and the previous sorted chunk; rounds
// are merged with weights softmax(log-sum-exp). Optional token mask rows
// divide B (row = b / (B / rows)).
Tensor lsh_attend(const Tensor& qk, const Tensor& v, const LshConfig& cfg, const KeyMask* token_mask = nullptr,
                  std::vector<LshPlan>* plans = nullptr);

// Exact softmax(q k_hat^T / sqrt(dh)) v with the same unit-key convention.
Tensor dense_attend(const Tensor& qk, const Tensor& v, const KeyMask* token_mask = nullptr,
                    bool include_self = true);

// Shared-QK multi-head attention block around the kernels:
// y' = Wo(LSHAtt(LN(y))) + y, s = MLP(LN(y')) + y'.
struct LshAttentionParams {
  LayerNormParams ln1, ln2;
  Tensor wqk, wv, wo;
  Mlp mlp;
  std::size_t heads = 1;

  LshAttentionParams() = default;
  LshAttentionParams(ParameterStore& store, const std::string& prefix, std::size_t dim, std::size_t mlp_dim,
                     std::size_t heads, Rng& rng);
};

// y: [F, S, D]. mask rows must divide F.
Tensor lsh_attention(const Tensor& y, const LshAttentionParams& params, const LshConfig& cfg,
                     const KeyMask* mask = nullptr);
Tensor dense_attention_oracle(const Tensor& y, const LshAttentionParams& params, const KeyMask* mask = nullptr);

}  // namespace sct
