// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sct/attention_kernel.hpp"
#include "sct/layers.hpp"

namespace sct {

// Partition of a token grid into non-overlapping chunks of m x n patches.
// The last chunk row/column is zero-padded when the grid does not divide.
struct ChunkLayout {
  std::size_t patch_h = 4, patch_w = 4;
  std::size_t chunk_rows = 0, chunk_cols = 0;  // m, n (clamped to the grid)
  std::size_t grid_rows = 0, grid_cols = 0;
  std::size_t chunks_down = 0, chunks_across = 0;
  std::size_t pad_rows = 0, pad_cols = 0;

  // Clamps the chunk shape to the grid when the grid is smaller.
  static ChunkLayout make(std::size_t grid_rows, std::size_t grid_cols, std::size_t chunk_rows,
                          std::size_t chunk_cols, std::size_t patch_h = 4, std::size_t patch_w = 4);

  std::size_t tokens_per_chunk() const { return chunk_rows * chunk_cols; }
  std::size_t chunk_count() const { return chunks_down * chunks_across; }
  std::size_t slot_count() const { return tokens_per_chunk() * chunk_count(); }

  // Grid index (row-major) feeding each chunk-major slot, -1 for padding.
  std::vector<std::int64_t> slot_sources() const;
  // 1 for real tokens, 0 for pad slots, chunk-major.
  std::vector<std::uint8_t> slot_mask() const;
};

// Frames of grid tokens [F, R, C, D] rearranged chunk-major.
struct ChunkedTokens {
  Tensor chunks;  // [F * Lp, L, D], zeros in pad slots
  KeyMask mask;   // rows = F * Lp
  Tensor keep;    // [F * Lp, L, 1] constant 0/1 used to zero pad outputs
};

ChunkedTokens partition_frame(const Tensor& grid_tokens, const ChunkLayout& layout);
// Inverse of partition_frame with pads dropped: [F * Lp, L, D] -> [F, R * C, D].
Tensor unpartition_frame(const Tensor& chunks, const ChunkLayout& layout, std::size_t frames);

// Weight-shared visual local transformer applied to every chunk.
struct ViltParams {
  Tensor patch_embed;  // [h*w*3, D] on the first stage only
  Tensor pos_embed;    // [L, D]
  std::vector<TransformerBlock> blocks;

  ViltParams() = default;
  ViltParams(ParameterStore& store, const std::string& prefix, std::size_t in_dim, std::size_t dim,
             std::size_t mlp_dim, std::size_t blocks, std::size_t heads, std::size_t tokens_per_chunk,
             bool embed_patches, Rng& rng);
};

// Chunk-local transformer over [F * Lp, L, Din]. Attention never crosses a
// chunk boundary; pad tokens are masked as keys and zeroed on output.
Tensor vilt_forward(const ChunkedTokens& chunks, const ViltParams& params);

struct PoolParams {
  Tensor projection;  // E_t [4D, 2D]

  PoolParams() = default;
  PoolParams(ParameterStore& store, const std::string& prefix, std::size_t dim, Rng& rng);
};

// For a R x C grid, the four source indices of every 2x2 group in the order
// (2i,2j), (2i,2j+1), (2i+1,2j), (2i+1,2j+1); -1 where the grid was padded.
std::vector<std::int64_t> pool_sources(std::size_t rows, std::size_t cols);

// [F, R * C, D] -> [F, ceil(R/2) * ceil(C/2), 2D].
Tensor linear_pool(const Tensor& tokens, std::size_t rows, std::size_t cols, const PoolParams& params);

}  // namespace sct
