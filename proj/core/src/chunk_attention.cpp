// SPDX-License-Identifier: Apache-2.0
#include "sct/chunk_attention.hpp"

#include <algorithm>

#include "sct/error.hpp"

namespace sct {

namespace {
std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }
}  // namespace

ChunkLayout ChunkLayout::make(std::size_t grid_rows, std::size_t grid_cols, std::size_t chunk_rows,
                              std::size_t chunk_cols, std::size_t patch_h, std::size_t patch_w) {
  if (grid_rows == 0 || grid_cols == 0 || chunk_rows == 0 || chunk_cols == 0) {
    throw ConfigError("chunk layout needs positive grid and chunk extents");
  }
  ChunkLayout l;
  l.patch_h = patch_h;
  l.patch_w = patch_w;
  l.grid_rows = grid_rows;
  l.grid_cols = grid_cols;
  l.chunk_rows = std::min(chunk_rows, grid_rows);
  l.chunk_cols = std::min(chunk_cols, grid_cols);
  l.chunks_down = ceil_div(grid_rows, l.chunk_rows);
  l.chunks_across = ceil_div(grid_cols, l.chunk_cols);
  l.pad_rows = l.chunks_down * l.chunk_rows - grid_rows;
  l.pad_cols = l.chunks_across * l.chunk_cols - grid_cols;
  return l;
}

std::vector<std::int64_t> ChunkLayout::slot_sources() const {
  std::vector<std::int64_t> src;
  src.reserve(slot_count());
  for (std::size_t cr = 0; cr < chunks_down; ++cr) {
    for (std::size_t cc = 0; cc < chunks_across; ++cc) {
      for (std::size_t i = 0; i < chunk_rows; ++i) {
        for (std::size_t j = 0; j < chunk_cols; ++j) {
          const auto r = cr * chunk_rows + i;
          const auto c = cc * chunk_cols + j;
          src.push_back(r < grid_rows && c < grid_cols ? static_cast<std::int64_t>(r * grid_cols + c) : -1);
        }
      }
    }
  }
  return src;
}

std::vector<std::uint8_t> ChunkLayout::slot_mask() const {
  auto src = slot_sources();
  std::vector<std::uint8_t> m(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) m[i] = src[i] >= 0 ? 1 : 0;
  return m;
}

ChunkedTokens partition_frame(const Tensor& grid_tokens, const ChunkLayout& layout) {
  const auto& s = grid_tokens.shape();
  if (s.size() != 4 || s[1] != layout.grid_rows || s[2] != layout.grid_cols) {
    throw DimensionError("partition_frame: tokens " + to_string(s) + " do not match a " +
                         std::to_string(layout.grid_rows) + "x" + std::to_string(layout.grid_cols) + " layout");
  }
  const auto frames = s[0], dim = s[3];
  const auto grid = layout.grid_rows * layout.grid_cols;
  const auto slots = layout.slot_count();
  const auto src = layout.slot_sources();
  std::vector<std::int64_t> idx(frames * slots);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < slots; ++i) {
      idx[f * slots + i] = src[i] < 0 ? -1 : static_cast<std::int64_t>(f * grid) + src[i];
    }
  }
  const auto L = layout.tokens_per_chunk();
  const auto rows = frames * layout.chunk_count();
  ChunkedTokens out;
  out.chunks = reshape(gather_rows(reshape(grid_tokens, {frames * grid, dim}), idx), {rows, L, dim});
  out.mask.rows = rows;
  out.mask.keys = L;
  out.mask.valid.resize(rows * L);
  std::vector<double> keep(rows * L);
  for (std::size_t i = 0; i < rows * L; ++i) {
    out.mask.valid[i] = idx[i] >= 0 ? 1 : 0;
    keep[i] = idx[i] >= 0 ? 1.0 : 0.0;
  }
  out.keep = Tensor({rows, L, 1}, std::move(keep));
  return out;
}

Tensor unpartition_frame(const Tensor& chunks, const ChunkLayout& layout, std::size_t frames) {
  const auto L = layout.tokens_per_chunk();
  const auto slots = layout.slot_count();
  if (chunks.rank() != 3 || chunks.dim(0) != frames * layout.chunk_count() || chunks.dim(1) != L) {
    throw DimensionError("unpartition_frame: chunks " + to_string(chunks.shape()) + " do not match layout");
  }
  const auto dim = chunks.dim(2);
  const auto grid = layout.grid_rows * layout.grid_cols;
  const auto src = layout.slot_sources();
  std::vector<std::int64_t> slot_of(grid, -1);
  for (std::size_t i = 0; i < slots; ++i)
    if (src[i] >= 0) slot_of[static_cast<std::size_t>(src[i])] = static_cast<std::int64_t>(i);
  std::vector<std::int64_t> idx(frames * grid);
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t g = 0; g < grid; ++g) idx[f * grid + g] = static_cast<std::int64_t>(f * slots) + slot_of[g];
  return reshape(gather_rows(reshape(chunks, {frames * slots, dim}), idx), {frames, grid, dim});
}

ViltParams::ViltParams(ParameterStore& store, const std::string& prefix, std::size_t in_dim, std::size_t dim,
                       std::size_t mlp_dim, std::size_t n_blocks, std::size_t heads, std::size_t tokens_per_chunk,
                       bool embed_patches, Rng& rng) {
  check_heads(dim, heads, prefix);
  if (embed_patches) {
    patch_embed = store.add(prefix + ".patch_embed", {in_dim, dim}, Init::kWeight, rng);
  } else if (in_dim != dim) {
    throw ConfigError(prefix + ": input width " + std::to_string(in_dim) + " differs from model width " +
                      std::to_string(dim) + " without a patch embedding");
  }
  pos_embed = store.add(prefix + ".pos_embed", {tokens_per_chunk, dim}, Init::kEmbedding, rng);
  for (std::size_t b = 0; b < n_blocks; ++b) {
    blocks.emplace_back(store, prefix + ".block" + std::to_string(b), dim, mlp_dim, heads, rng);
  }
}

Tensor vilt_forward(const ChunkedTokens& chunks, const ViltParams& params) {
  const auto L = chunks.chunks.dim(1);
  if (params.pos_embed.dim(0) != L) {
    throw DimensionError("ViLT position embedding covers " + std::to_string(params.pos_embed.dim(0)) +
                         " tokens, chunks hold " + std::to_string(L));
  }
  Tensor z = params.patch_embed.defined() ? matmul(chunks.chunks, params.patch_embed) : chunks.chunks;
  z = add(z, params.pos_embed);
  for (const auto& block : params.blocks) z = block(z, &chunks.mask);
  return mul(z, chunks.keep);
}

PoolParams::PoolParams(ParameterStore& store, const std::string& prefix, std::size_t dim, Rng& rng)
    : projection(store.add(prefix + ".projection", {4 * dim, 2 * dim}, Init::kWeight, rng)) {}

std::vector<std::int64_t> pool_sources(std::size_t rows, std::size_t cols) {
  const auto out_rows = ceil_div(rows, 2), out_cols = ceil_div(cols, 2);
  std::vector<std::int64_t> src;
  src.reserve(out_rows * out_cols * 4);
  auto at = [&](std::size_t r, std::size_t c) -> std::int64_t {
    return r < rows && c < cols ? static_cast<std::int64_t>(r * cols + c) : -1;
  };
  for (std::size_t i = 0; i < out_rows; ++i) {
    for (std::size_t j = 0; j < out_cols; ++j) {
      src.push_back(at(2 * i, 2 * j));
      src.push_back(at(2 * i, 2 * j + 1));
      src.push_back(at(2 * i + 1, 2 * j));
      src.push_back(at(2 * i + 1, 2 * j + 1));
    }
  }
  return src;
}

Tensor linear_pool(const Tensor& tokens, std::size_t rows, std::size_t cols, const PoolParams& params) {
  if (tokens.rank() != 3 || tokens.dim(1) != rows * cols) {
    throw DimensionError("linear_pool: tokens " + to_string(tokens.shape()) + " are not a " + std::to_string(rows) +
                         "x" + std::to_string(cols) + " grid");
  }
  const auto frames = tokens.dim(0), dim = tokens.dim(2);
  if (params.projection.dim(0) != 4 * dim) {
    throw DimensionError("linear_pool: projection " + to_string(params.projection.shape()) + " expects width " +
                         std::to_string(params.projection.dim(0) / 4) + ", got " + std::to_string(dim));
  }
  const auto src = pool_sources(rows, cols);
  const auto groups = src.size() / 4;
  std::vector<std::int64_t> idx(frames * src.size());
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t i = 0; i < src.size(); ++i)
      idx[f * src.size() + i] = src[i] < 0 ? -1 : static_cast<std::int64_t>(f * rows * cols) + src[i];
  auto squeezed = reshape(gather_rows(reshape(tokens, {frames * rows * cols, dim}), idx), {frames, groups, 4 * dim});
  return matmul(squeezed, params.projection);
}

}  // namespace sct
