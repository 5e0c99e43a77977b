// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sct/lsh.hpp"

namespace sct {

// Per-frame global attention inside each stage.
enum class GlobalAttention { kLsh, kDense };
// Frame-level attention after each stage: shifted keys, or keys from the same frame.
enum class TemporalAttention { kShifted, kSpace };

struct SctConfig {
  std::string name = "custom";
  std::size_t frames = 8;
  std::size_t height = 32, width = 32;
  std::size_t patch_h = 4, patch_w = 4;
  std::size_t chunk_rows = 7, chunk_cols = 7;
  std::size_t stages = 4;
  std::size_t embed_dim = 96;  // D of the first stage, doubled by every pool
  std::size_t mlp_dim = 384;   // MLP size at width D, scaled with the width
  std::size_t vilt_blocks = 4;
  std::size_t heads_vilt = 4, heads_lsh = 6, heads_shift = 8, heads_clip = 8;
  std::size_t clip_dim = 192, clip_mlp = 768, clip_blocks = 4;
  std::size_t num_classes = 400;
  LshConfig lsh;
  GlobalAttention global_attention = GlobalAttention::kLsh;
  TemporalAttention temporal_attention = TemporalAttention::kShifted;
  std::size_t shift_frames = 1, shift_layers = 1;
  bool attn_residual = false;
  double dropout = 0.0;
  InitScheme init = InitScheme::kTruncatedNormal;

  static constexpr std::size_t kChannels = 3;

  bool pools_after(std::size_t stage) const { return stage + 1 < stages; }
  // Width of ViLT and LSH attention at a stage.
  std::size_t stage_dim(std::size_t stage) const { return embed_dim << stage; }
  std::size_t stage_mlp(std::size_t stage) const { return mlp_dim << stage; }
  // Width after the optional pool, used by the temporal attention.
  std::size_t temporal_dim(std::size_t stage) const { return stage_dim(stage) * (pools_after(stage) ? 2 : 1); }
  std::size_t temporal_mlp(std::size_t stage) const { return stage_mlp(stage) * (pools_after(stage) ? 2 : 1); }
  std::size_t final_dim() const { return temporal_dim(stages - 1); }
  std::size_t patch_dim() const { return patch_h * patch_w * kChannels; }

  // Throws ConfigError naming the offending field or stage.
  void validate() const;
};

// "sct-s", "sct-m", "sct-l", "sct-tiny".
SctConfig model_preset(const std::string& name);
std::vector<std::string> model_preset_names();

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double momentum = 0.9;
  double lr = 0.3;
  std::size_t warmup_epochs = 2;
  double label_smoothing = 0.1;
  double dropout = 0.2;
  // Global L2 gradient-norm ceiling applied before each step; 0 disables.
  double grad_clip = 0.0;
  // Source frames per second and distance between sampled frames. Stored
  // clips are already at their sampling rate, so only the stride is used.
  std::size_t frame_rate = 5, frame_stride = 10;
  std::size_t n_views = 4;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

// "k400", "k600", "ucf101", "hmdb51", "mmt", and "desk" for synthetic data.
TrainConfig train_preset(const std::string& name);
std::vector<std::string> train_preset_names();

using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Lines of key=value; '#' starts a comment; blank lines are skipped.
KeyValues parse_key_values(const std::string& text, const std::string& source = "<string>");
KeyValues read_key_values(const std::string& path);

// Returns false when the key belongs to neither schema.
bool apply_key(SctConfig& cfg, const std::string& key, const std::string& value);
bool apply_key(TrainConfig& cfg, const std::string& key, const std::string& value);
// Applies every pair, throwing ConfigError on unknown keys. Keys "preset"
// and "train_preset" are skipped here; callers resolve them first.
void apply_all(const KeyValues& kv, SctConfig& model, TrainConfig& train);

std::string to_key_values(const SctConfig& cfg);
std::string to_key_values(const TrainConfig& cfg);

}  // namespace sct
