// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sct/chunk_attention.hpp"
#include "sct/clip_encoder.hpp"
#include "sct/config.hpp"
#include "sct/lsh.hpp"
#include "sct/shifted_msa.hpp"
#include "sct/trace.hpp"
#include "sct/video_io.hpp"

namespace sct {

// Token geometry of one stage, derived from the config.
struct StageGeometry {
  std::size_t grid_rows = 0, grid_cols = 0;  // tokens entering the stage
  std::size_t in_dim = 0;                    // raw patch width at stage 0, model width after
  std::size_t dim = 0, mlp = 0;              // ViLT / LSH width
  ChunkLayout layout;
  bool pools = false;
  std::size_t out_rows = 0, out_cols = 0;  // grid after the optional pool
  std::size_t temporal_dim = 0, temporal_mlp = 0;

  std::size_t tokens() const { return grid_rows * grid_cols; }
  std::size_t out_tokens() const { return out_rows * out_cols; }
};

std::vector<StageGeometry> stage_geometry(const SctConfig& cfg);

struct StageParams {
  ViltParams vilt;
  LshAttentionParams global;
  PoolParams pool;  // undefined projection when the stage does not pool
  ShiftedMsaParams temporal;
};

struct ForwardOptions {
  bool train = false;
  Rng* rng = nullptr;               // dropout, only used in training
  AttentionTrace* trace = nullptr;  // filled with shifted-MSA and clip attention
  // Receives the input of every stage plus the clip-encoder features
  // (stages + 1 tensors), detached, for forward_from_stage.
  std::vector<Tensor>* stage_inputs = nullptr;
};

class SctModel {
 public:
  static SctModel build(const SctConfig& cfg, std::uint64_t seed);

  SctModel(SctModel&&) = default;
  SctModel& operator=(SctModel&&) = default;
  SctModel(const SctModel&) = delete;
  SctModel& operator=(const SctModel&) = delete;

  const SctConfig& config() const { return config_; }
  const std::vector<StageGeometry>& geometry() const { return geometry_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const std::vector<StageParams>& stages() const { return stages_; }
  const ClipEncoderParams& clip_encoder() const { return clip_; }
  // Dropout rate of the classification head; training may override it.
  void set_dropout(double rate) { clip_.dropout = rate; }

  // Logits [num_classes].
  Tensor forward(const VideoClip& clip, const ForwardOptions& options = {}) const;
  // patches: [T, R, C, h*w*3] as produced by clip_to_patches.
  Tensor forward_patches(const Tensor& patches, const ForwardOptions& options = {}) const;
  // Resumes from the input of `stage`; stage == stages means the input is
  // the [T, D_final] feature matrix of the clip encoder.
  Tensor forward_from_stage(std::size_t stage, const Tensor& input, const ForwardOptions& options = {}) const;
  // Per-frame CLS features [T, D_final] entering the clip encoder.
  Tensor frame_features(const Tensor& patches, const ForwardOptions& options = {}) const;

 private:
  SctModel() = default;
  Tensor run_stage(std::size_t s, const Tensor& input, AttentionTrace* trace) const;

  SctConfig config_;
  std::vector<StageGeometry> geometry_;
  ParameterStore store_;
  std::vector<StageParams> stages_;
  ClipEncoderParams clip_;
};

// Frames -> [T, H/h, W/w, h*w*C] with pixels mapped to x / 127.5 - 1 and
// each patch vector ordered (row, col, channel).
Tensor clip_to_patches(const VideoClip& clip, std::size_t patch_h, std::size_t patch_w);

// Index of the largest logit.
std::size_t argmax(std::span<const double> values);

}  // namespace sct
