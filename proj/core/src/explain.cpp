// SPDX-License-Identifier: Apache-2.0
#include "sct/explain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "sct/error.hpp"

namespace sct {

namespace {

Matrix identity(std::size_t n) {
  Matrix m{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) m.values[i * n + i] = 1.0;
  return m;
}

constexpr double kOverlayAlpha = 0.5;

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw TraceError("rollout matrices do not chain: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                     " by " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
  }
  Matrix out{a.rows, b.cols, std::vector<double>(a.rows * b.cols, 0.0)};
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double v = a.values[i * a.cols + k];
      if (v == 0.0) continue;
      const double* brow = b.values.data() + k * b.cols;
      double* orow = out.values.data() + i * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += v * brow[j];
    }
  }
  return out;
}

Matrix mix_layer(const AttentionMap& map, std::size_t frame, const RolloutOptions& options) {
  if (frame >= map.frames) {
    throw TraceError("frame " + std::to_string(frame) + " not in a trace of " + std::to_string(map.frames));
  }
  const auto n = map.tokens;
  if (map.heads == 0 || map.weights.size() != map.frames * map.heads * n * n) {
    throw TraceError("attention map storage does not match its extents");
  }
  Matrix m{n, n, std::vector<double>(n * n, 0.0)};
  for (std::size_t h = 0; h < map.heads; ++h)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m.values[i * n + j] += map.at(frame, h, i, j) / map.heads;
  if (!options.raw) {
    for (auto& v : m.values) v *= 0.5;
    for (std::size_t i = 0; i < n; ++i) m.values[i * n + i] += 0.5;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += m.values[i * n + j];
    if (z > 0.0)
      for (std::size_t j = 0; j < n; ++j) m.values[i * n + j] /= z;
  }
  return m;
}

Matrix pooling_transfer(std::size_t rows, std::size_t cols, std::size_t parent_rows, std::size_t parent_cols) {
  if (rows == parent_rows && cols == parent_cols) return identity(rows * cols + 1);
  if (rows != (parent_rows + 1) / 2 || cols != (parent_cols + 1) / 2) {
    throw TraceError("grid " + std::to_string(rows) + "x" + std::to_string(cols) + " is not a pooled " +
                     std::to_string(parent_rows) + "x" + std::to_string(parent_cols) + " grid");
  }
  const auto n = rows * cols + 1, p = parent_rows * parent_cols + 1;
  Matrix m{n, p, std::vector<double>(n * p, 0.0)};
  m.values[0] = 1.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      std::vector<std::size_t> kids;
      for (std::size_t di = 0; di < 2; ++di)
        for (std::size_t dj = 0; dj < 2; ++dj) {
          const auto r = 2 * i + di, c = 2 * j + dj;
          if (r < parent_rows && c < parent_cols) kids.push_back(1 + r * parent_cols + c);
        }
      const auto row = 1 + i * cols + j;
      for (auto k : kids) m.values[row * p + k] = 1.0 / static_cast<double>(kids.size());
    }
  }
  return m;
}

Matrix rollout_matrix(const AttentionTrace& trace, std::size_t frame, const RolloutOptions& options) {
  if (trace.stages.empty()) throw TraceError("rollout needs a non-empty trace");
  Matrix total;
  for (std::size_t s = trace.stages.size(); s-- > 0;) {
    const auto& stage = trace.stages[s];
    const auto n = stage.grid_rows * stage.grid_cols + 1;
    if (!total.values.empty()) {
      const auto& later = trace.stages[s + 1];
      total = matmul(total, pooling_transfer(later.grid_rows, later.grid_cols, stage.grid_rows, stage.grid_cols));
    } else {
      total = identity(n);
    }
    for (std::size_t l = stage.layers.size(); l-- > 0;) {
      const auto& map = stage.layers[l];
      if (map.tokens != n) {
        throw TraceError("stage " + std::to_string(s) + " layer " + std::to_string(l) + " has " +
                         std::to_string(map.tokens) + " tokens, grid implies " + std::to_string(n));
      }
      total = matmul(total, mix_layer(map, frame, options));
    }
  }
  return total;
}

RolloutMap rollout(const AttentionTrace& trace, const RolloutOptions& options) {
  if (trace.stages.empty()) throw TraceError("rollout needs a non-empty trace");
  std::size_t frames = 0;
  for (const auto& st : trace.stages)
    for (const auto& l : st.layers) frames = std::max(frames, l.frames);
  if (frames == 0) throw TraceError("trace holds no attention layers");
  RolloutMap out;
  out.frames = frames;
  out.grid_rows = trace.stages.front().grid_rows;
  out.grid_cols = trace.stages.front().grid_cols;
  const auto cells = out.grid_rows * out.grid_cols;
  for (std::size_t f = 0; f < frames; ++f) {
    const auto m = rollout_matrix(trace, f, options);
    out.cls_mass.push_back(m.values[0]);
    out.values.insert(out.values.end(), m.values.begin() + 1, m.values.begin() + 1 + static_cast<std::ptrdiff_t>(cells));
  }
  return out;
}

std::vector<double> upsample_nearest(const RolloutMap& map, std::size_t frame, std::size_t height, std::size_t width) {
  if (frame >= map.frames) throw TraceError("frame " + std::to_string(frame) + " outside the rollout");
  const auto src = map.frame(frame);
  std::vector<double> out(height * width);
  for (std::size_t y = 0; y < height; ++y) {
    const auto r = std::min(map.grid_rows - 1, y * map.grid_rows / height);
    for (std::size_t x = 0; x < width; ++x) {
      const auto c = std::min(map.grid_cols - 1, x * map.grid_cols / width);
      out[y * width + x] = src[r * map.grid_cols + c];
    }
  }
  return out;
}

std::vector<std::uint8_t> render_heatmap(std::span<const double> heat, const VideoClip& clip, std::size_t frame) {
  if (frame >= clip.frames) throw IndexError("frame " + std::to_string(frame) + " out of range");
  if (clip.channels != 3) throw DimensionError("heatmaps need three-channel frames");
  const auto H = clip.height, W = clip.width;
  if (heat.size() != H * W) throw DimensionError("heat map size does not match the frame");
  const auto [lo_it, hi_it] = std::minmax_element(heat.begin(), heat.end());
  const double lo = *lo_it, range = *hi_it - *lo_it;
  const std::string header = "P6\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + H * W * 3);
  const auto* px = clip.frame(frame);
  for (std::size_t i = 0; i < H * W; ++i) {
    const double v = range > 0.0 ? (heat[i] - lo) / range : 0.0;
    const double color[3] = {255.0 * v, 255.0 * (1.0 - std::abs(2.0 * v - 1.0)), 255.0 * (1.0 - v)};
    for (int ch = 0; ch < 3; ++ch) {
      const double blended = (1.0 - kOverlayAlpha) * px[i * 3 + ch] + kOverlayAlpha * color[ch];
      out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(blended), 0L, 255L)));
    }
  }
  return out;
}

void write_heatmap(std::span<const double> heat, const VideoClip& clip, std::size_t frame, const std::string& path) {
  write_file_bytes(path, render_heatmap(heat, clip, frame));
}

PpmImage parse_ppm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    const auto start = pos;
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw FormatError(std::string("PPM header: expected ") + what, pos);
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("not a binary PPM", 0);
  pos = 2;
  PpmImage img;
  img.width = number("width");
  img.height = number("height");
  img.max_value = number("max value");
  if (img.max_value == 0 || img.max_value > 255) throw FormatError("unsupported PPM max value", pos);
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("PPM header not terminated", pos);
  ++pos;
  const auto need = img.width * img.height * 3;
  if (bytes.size() - pos != need) throw FormatError("PPM pixel data has the wrong size", bytes.size());
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return img;
}

std::vector<double> frame_weights(const AttentionTrace& trace) {
  const auto& m = trace.clip;
  if (m.tokens < 2 || m.heads == 0 || m.weights.size() != m.heads * m.tokens * m.tokens) {
    throw TraceError("trace holds no clip-encoder attention");
  }
  std::vector<double> w(m.tokens - 1, 0.0);
  for (std::size_t h = 0; h < m.heads; ++h)
    for (std::size_t t = 1; t < m.tokens; ++t) w[t - 1] += m.at(0, h, 0, t) / m.heads;
  return w;
}

void write_frame_weights_csv(const std::string& clip_id, const std::vector<double>& weights, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  out << "clip_id,frame,weight\n";
  out.precision(9);
  for (std::size_t t = 0; t < weights.size(); ++t) out << clip_id << ',' << t << ',' << weights[t] << '\n';
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace sct
