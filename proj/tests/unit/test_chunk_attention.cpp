// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sct/attention_kernel.hpp"
#include "sct/chunk_attention.hpp"
#include "sct/error.hpp"
#include "sct/ops.hpp"

namespace sct {
namespace {

using oracle::random_tensor;

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

TEST(AttentionKernel, MatchesPlainLoopOracle) {
  const std::size_t B = 3, Sq = 4, Sk = 5, d = 6, dv = 2;
  auto q = random_tensor({B, Sq, d}, 1), k = random_tensor({B, Sk, d}, 2), v = random_tensor({B, Sk, dv}, 3);
  AttentionOptions opt;
  opt.scale = 0.37;
  auto out = scaled_dot_attention(q, k, v, opt);
  ASSERT_EQ(out.shape(), (Shape{B, Sq, dv}));
  for (std::size_t b = 0; b < B; ++b) {
    auto slice_of = [&](const Tensor& t, std::size_t rows, std::size_t cols) {
      return std::vector<double>(t.data().begin() + static_cast<std::ptrdiff_t>(b * rows * cols),
                                 t.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * rows * cols));
    };
    auto want = oracle::attention(slice_of(q, Sq, d), slice_of(k, Sk, d), slice_of(v, Sk, dv), Sq, Sk, d, dv, 0.37);
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(out[b * Sq * dv + i], want[i], 1e-12);
  }
}

TEST(AttentionKernel, GradientMatchesFiniteDifferences) {
  auto q = random_tensor({2, 3, 4}, 4, true), k = random_tensor({2, 5, 4}, 5, true), v = random_tensor({2, 5, 3}, 6, true);
  auto w = random_tensor({2, 3, 3}, 7);
  KeyMask mask{2, 5, {1, 1, 0, 1, 1, 1, 0, 1, 1, 0}};
  AttentionOptions opt;
  opt.scale = 0.5;
  opt.key_mask = &mask;
  auto r = oracle::check_all_gradients([&] { return sum(mul(scaled_dot_attention(q, k, v, opt), w)); }, {q, k, v});
  EXPECT_LT(r.max_rel, 1e-6) << r.worst;
}

TEST(AttentionKernel, MaskedKeysGetExactlyZeroWeight) {
  auto q = random_tensor({1, 3, 4}, 8), k = random_tensor({1, 4, 4}, 9), v = random_tensor({1, 4, 2}, 10);
  KeyMask mask{1, 4, {1, 0, 1, 0}};
  std::vector<double> probs;
  AttentionOptions opt;
  opt.key_mask = &mask;
  opt.probs_out = &probs;
  scaled_dot_attention(q, k, v, opt);
  ASSERT_EQ(probs.size(), 12u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(probs[i * 4 + 1], 0.0);
    EXPECT_EQ(probs[i * 4 + 3], 0.0);
    EXPECT_NEAR(probs[i * 4] + probs[i * 4 + 2], 1.0, 1e-12);
  }
}

TEST(AttentionKernel, LogSumExpColumn) {
  auto q = random_tensor({1, 2, 3}, 11), k = random_tensor({1, 3, 3}, 12), v = random_tensor({1, 3, 2}, 13);
  AttentionOptions opt;
  opt.scale = 0.8;
  opt.with_lse = true;
  auto out = scaled_dot_attention(q, k, v, opt);
  ASSERT_EQ(out.shape(), (Shape{1, 2, 3}));
  for (std::size_t i = 0; i < 2; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < 3; ++c) dot += q[i * 3 + c] * k[j * 3 + c];
      z += std::exp(0.8 * dot);
    }
    EXPECT_NEAR(out[i * 3 + 2], std::log(z), 1e-12);
  }
}

TEST(AttentionKernel, SelfPairScoresFixedValue) {
  auto q = random_tensor({1, 2, 2}, 14), k = random_tensor({1, 2, 2}, 15), v = random_tensor({1, 2, 1}, 16);
  std::vector<std::int64_t> ids{0, 1};
  std::vector<double> probs;
  AttentionOptions opt;
  opt.query_ids = &ids;
  opt.key_ids = &ids;
  opt.probs_out = &probs;
  scaled_dot_attention(q, k, v, opt);
  EXPECT_LT(probs[0], 1e-30);
  EXPECT_NEAR(probs[1], 1.0, 1e-12);
}

TEST(ChunkLayout, FullResolutionFrame) {
  auto l = ChunkLayout::make(56, 56, 7, 7);
  EXPECT_EQ(l.tokens_per_chunk(), 49u);
  EXPECT_EQ(l.chunk_count(), 64u);
  EXPECT_EQ(l.chunks_down, 8u);
  EXPECT_EQ(l.pad_rows + l.pad_cols, 0u);
}

TEST(ChunkLayout, DeskFrameDividesExactly) {
  auto l = ChunkLayout::make(8, 8, 4, 4);
  EXPECT_EQ(l.tokens_per_chunk(), 16u);
  EXPECT_EQ(l.chunk_count(), 4u);
  for (auto m : l.slot_mask()) EXPECT_EQ(m, 1);
}

TEST(ChunkLayout, PaddedGridMaskCount) {
  auto l = ChunkLayout::make(9, 9, 4, 4);
  EXPECT_EQ(l.chunk_count(), 9u);
  const auto mask = l.slot_mask();
  ASSERT_EQ(mask.size(), 144u);
  // Enumerate the padded 12x12 canvas directly: a slot is padding when its
  // row or column falls past the 9x9 grid.
  std::size_t want = 0;
  for (std::size_t r = 0; r < 12; ++r)
    for (std::size_t c = 0; c < 12; ++c) want += (r >= 9 || c >= 9);
  std::size_t pads = 0;
  for (auto m : mask) pads += m == 0;
  EXPECT_EQ(pads, want);
  EXPECT_EQ(pads, 63u);
}

TEST(ChunkLayout, ClampsToSmallGrid) {
  auto l = ChunkLayout::make(2, 3, 4, 4);
  EXPECT_EQ(l.chunk_rows, 2u);
  EXPECT_EQ(l.chunk_cols, 3u);
  EXPECT_EQ(l.chunk_count(), 1u);
  EXPECT_THROW(ChunkLayout::make(0, 3, 4, 4), ConfigError);
}

TEST(Partition, RoundTripIsExact) {
  for (auto [rows, cols] : std::vector<std::pair<std::size_t, std::size_t>>{{8, 8}, {9, 9}, {5, 7}}) {
    auto layout = ChunkLayout::make(rows, cols, 4, 4);
    auto x = random_tensor({2, rows, cols, 3}, rows * 10 + cols);
    auto chunks = partition_frame(x, layout);
    auto back = unpartition_frame(chunks.chunks, layout, 2);
    ASSERT_EQ(back.numel(), x.numel());
    for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(back[i], x[i]);
    for (std::size_t i = 0; i < chunks.mask.valid.size(); ++i) {
      if (chunks.mask.valid[i]) continue;
      for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(chunks.chunks[i * 3 + c], 0.0);
    }
  }
}

TEST(Partition, GridMismatchIsADimensionError) {
  auto layout = ChunkLayout::make(8, 8, 4, 4);
  EXPECT_THROW(partition_frame(Tensor::zeros({1, 8, 7, 3}), layout), DimensionError);
}

ViltParams make_vilt(ParameterStore& store, std::size_t in_dim, std::size_t dim, std::size_t blocks, std::size_t L,
                     bool embed, std::uint64_t seed) {
  Rng rng(seed);
  ViltParams p(store, "vilt", in_dim, dim, 2 * dim, blocks, 2, L, embed, rng);
  oracle::randomize(store, seed + 1);
  return p;
}

TEST(Vilt, EmptyStackAddsPositionEmbedding) {
  ParameterStore store;
  auto p = make_vilt(store, 4, 4, 0, 4, false, 1);
  auto layout = ChunkLayout::make(2, 4, 2, 2);
  auto x = random_tensor({1, 2, 4, 4}, 2);
  auto chunks = partition_frame(x, layout);
  auto out = vilt_forward(chunks, p);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    EXPECT_DOUBLE_EQ(out[i], chunks.chunks[i] + p.pos_embed[i % 16]);
  }
}

TEST(Vilt, SingleChunkMatchesStraightLineBlock) {
  ParameterStore store;
  auto p = make_vilt(store, 6, 6, 1, 6, false, 3);
  auto layout = ChunkLayout::make(2, 3, 2, 3);
  auto x = random_tensor({1, 2, 3, 6}, 4);
  auto out = vilt_forward(partition_frame(x, layout), p);
  auto in = values(x);
  for (std::size_t i = 0; i < in.size(); ++i) in[i] += p.pos_embed[i];
  auto want = oracle::transformer_block(in, 6, 6, oracle::weights_of(p.blocks[0]));
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(out[i], want[i], 1e-10);
}

TEST(Vilt, IdenticalChunksGiveIdenticalOutputs) {
  ParameterStore store;
  auto p = make_vilt(store, 4, 4, 2, 4, false, 5);
  auto layout = ChunkLayout::make(2, 4, 2, 2);
  auto half = random_tensor({2, 2, 4}, 6);
  std::vector<double> grid(2 * 4 * 4);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t d = 0; d < 4; ++d) grid[(r * 4 + c) * 4 + d] = half[(r * 2 + c % 2) * 4 + d];
  auto out = vilt_forward(partition_frame(Tensor({1, 2, 4, 4}, grid), layout), p);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(out[i], out[16 + i]);
}

TEST(Vilt, ChunkTranslationEquivariance) {
  ParameterStore store;
  auto p = make_vilt(store, 3, 4, 2, 4, true, 7);
  const std::size_t R = 4, C = 6;
  auto layout = ChunkLayout::make(R, C, 2, 2);
  auto x = random_tensor({1, R, C, 3}, 8);
  // Shift the grid right by one chunk (two columns), wrapping around.
  std::vector<double> shifted(x.numel());
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t d = 0; d < 3; ++d) shifted[(r * C + (c + 2) % C) * 3 + d] = x[(r * C + c) * 3 + d];
  auto a = unpartition_frame(vilt_forward(partition_frame(x, layout), p), layout, 1);
  auto b = unpartition_frame(vilt_forward(partition_frame(Tensor({1, R, C, 3}, shifted), layout), p), layout, 1);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(b[(r * C + (c + 2) % C) * 4 + d], a[(r * C + c) * 4 + d]);
}

TEST(Vilt, PadTokensTakeNoAttentionAndStayZero) {
  ParameterStore store;
  auto p = make_vilt(store, 4, 4, 1, 4, false, 9);
  auto layout = ChunkLayout::make(3, 3, 2, 2);
  auto chunks = partition_frame(random_tensor({1, 3, 3, 4}, 10), layout);
  std::vector<double> probs;
  auto z = add(chunks.chunks, p.pos_embed);
  p.blocks[0].msa(p.blocks[0].ln1(z), &chunks.mask, &probs);
  const std::size_t rows = chunks.mask.rows, L = 4, heads = 2;
  ASSERT_EQ(probs.size(), rows * heads * L * L);
  for (std::size_t b = 0; b < rows * heads; ++b)
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < L; ++j)
        if (!chunks.mask.allows(b / heads, j)) EXPECT_EQ(probs[(b * L + i) * L + j], 0.0);
  auto out = vilt_forward(chunks, p);
  for (std::size_t s = 0; s < rows * L; ++s)
    if (!chunks.mask.valid[s])
      for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(out[s * 4 + d], 0.0);
}

TEST(Vilt, HeadsMustDivideWidth) {
  ParameterStore store;
  Rng rng(1);
  EXPECT_THROW(ViltParams(store, "v", 6, 6, 12, 1, 4, 4, false, rng), ConfigError);
}

TEST(Vilt, GradientMatchesFiniteDifferences) {
  ParameterStore store;
  auto p = make_vilt(store, 3, 4, 1, 4, true, 11);
  auto layout = ChunkLayout::make(3, 3, 2, 2);
  auto x = random_tensor({1, 3, 3, 3}, 12, true);
  auto w = random_tensor({1, 9, 4}, 13);
  auto loss = [&] { return sum(mul(unpartition_frame(vilt_forward(partition_frame(x, layout), p), layout, 1), w)); };
  std::vector<Tensor> inputs{x};
  for (auto& param : store.all()) inputs.push_back(param.tensor);
  auto r = oracle::check_all_gradients(loss, inputs);
  EXPECT_LT(r.max_rel, 1e-6) << r.worst;
}

TEST(LinearPool, SingleGroupDoublesWidth) {
  ParameterStore store;
  Rng rng(1);
  PoolParams p(store, "pool", 3, rng);
  auto out = linear_pool(random_tensor({1, 4, 3}, 2), 2, 2, p);
  EXPECT_EQ(out.shape(), (Shape{1, 1, 6}));
}

TEST(LinearPool, FullResolutionStageOneShape) {
  ParameterStore store;
  Rng rng(1);
  PoolParams p(store, "pool", 96, rng);
  auto out = linear_pool(Tensor::zeros({1, 56 * 56, 96}), 56, 56, p);
  EXPECT_EQ(out.shape(), (Shape{1, 28 * 28, 192}));
}

TEST(LinearPool, OddGridsRoundUp) {
  ParameterStore store;
  Rng rng(1);
  PoolParams p(store, "pool", 2, rng);
  for (auto [r, c] : std::vector<std::pair<std::size_t, std::size_t>>{{3, 5}, {1, 1}, {7, 2}}) {
    auto out = linear_pool(random_tensor({2, r * c, 2}, r + c), r, c, p);
    EXPECT_EQ(out.shape(), (Shape{2, ((r + 1) / 2) * ((c + 1) / 2), 4}));
  }
}

TEST(LinearPool, SelectorProjectionPicksTopLeftToken) {
  ParameterStore store;
  Rng rng(1);
  const std::size_t D = 3;
  PoolParams p(store, "pool", D, rng);
  auto e = p.projection.mutable_data();
  std::fill(e.begin(), e.end(), 0.0);
  for (std::size_t i = 0; i < D; ++i) e[i * 2 * D + i] = 1.0;
  const std::size_t R = 4, C = 4;
  auto x = random_tensor({1, R * C, D}, 3);
  auto out = linear_pool(x, R, C, p);
  for (std::size_t i = 0; i < R / 2; ++i)
    for (std::size_t j = 0; j < C / 2; ++j)
      for (std::size_t d = 0; d < D; ++d) {
        EXPECT_EQ(out[(i * C / 2 + j) * 2 * D + d], x[((2 * i) * C + 2 * j) * D + d]);
        EXPECT_EQ(out[(i * C / 2 + j) * 2 * D + D + d], 0.0);
      }
}

TEST(LinearPool, ConcatenationOrder) {
  const auto src = pool_sources(2, 2);
  EXPECT_EQ(src, (std::vector<std::int64_t>{0, 1, 2, 3}));
  const auto odd = pool_sources(3, 3);
  EXPECT_EQ(std::vector<std::int64_t>(odd.begin() + 4, odd.begin() + 8), (std::vector<std::int64_t>{2, -1, 5, -1}));
}

}  // namespace
}  // namespace sct
