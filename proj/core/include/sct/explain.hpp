// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sct/trace.hpp"
#include "sct/video_io.hpp"

namespace sct {

struct RolloutOptions {
  // Skip the 0.5 A + 0.5 I residual mixing and use head-averaged A as is.
  bool raw = false;
};

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

Matrix matmul(const Matrix& a, const Matrix& b);

// Head-averaged attention of one frame, optionally mixed with the identity
// and renormalized per row.
Matrix mix_layer(const AttentionMap& map, std::size_t frame, const RolloutOptions& options);

// Maps tokens of a pooled grid back onto the grid it was pooled from. Row 0
// and column 0 are the CLS slots; every other row spreads its mass evenly
// over the (up to four) source tokens of its 2x2 group. Equal grids give the
// identity. Throws TraceError when the grids are not related by pooling.
Matrix pooling_transfer(std::size_t rows, std::size_t cols, std::size_t parent_rows, std::size_t parent_cols);

// Product of every mixed shifted-MSA layer of one frame, later layers on
// the left, with stage grids linked by pooling_transfer. Rows index the last
// stage's tokens, columns the first stage's tokens (CLS first).
Matrix rollout_matrix(const AttentionTrace& trace, std::size_t frame, const RolloutOptions& options = {});

// CLS row of the rollout per frame, split into the CLS share and a map over
// the first stage's token grid.
struct RolloutMap {
  std::size_t frames = 0, grid_rows = 0, grid_cols = 0;
  std::vector<double> cls_mass;  // [frames]
  std::vector<double> values;    // [frames, grid_rows * grid_cols]

  std::span<const double> frame(std::size_t f) const {
    return {values.data() + f * grid_rows * grid_cols, grid_rows * grid_cols};
  }
};

RolloutMap rollout(const AttentionTrace& trace, const RolloutOptions& options = {});

// Nearest-neighbour upsampling of one frame's map to height x width.
std::vector<double> upsample_nearest(const RolloutMap& map, std::size_t frame, std::size_t height, std::size_t width);

// Binary PPM (P6) of `frame` blended with the min-max normalized heat map
// (height * width values).
std::vector<std::uint8_t> render_heatmap(std::span<const double> heat, const VideoClip& clip, std::size_t frame);
void write_heatmap(std::span<const double> heat, const VideoClip& clip, std::size_t frame, const std::string& path);

struct PpmImage {
  std::size_t width = 0, height = 0, max_value = 0;
  std::vector<std::uint8_t> pixels;
};
// Parses binary P6 data; throws FormatError on malformed input.
PpmImage parse_ppm(const std::vector<std::uint8_t>& bytes);

// Head-averaged attention of the global CLS onto each frame in the last
// clip-encoder block ([T] values).
std::vector<double> frame_weights(const AttentionTrace& trace);
// CSV "clip_id,frame,weight".
void write_frame_weights_csv(const std::string& clip_id, const std::vector<double>& weights, const std::string& path);

}  // namespace sct
