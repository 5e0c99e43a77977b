// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sct/random.hpp"

namespace sct {

// T x H x W x C unsigned bytes, frame-major, plus label and id.
struct VideoClip {
  std::size_t frames = 0, height = 0, width = 0, channels = 3;
  std::vector<std::uint8_t> pixels;
  std::size_t label = 0;
  std::string id;

  std::size_t frame_bytes() const { return height * width * channels; }
  const std::uint8_t* frame(std::size_t t) const { return pixels.data() + t * frame_bytes(); }
  std::uint8_t* frame(std::size_t t) { return pixels.data() + t * frame_bytes(); }
  // Copy holding the given frames, in order.
  VideoClip select_frames(const std::vector<std::size_t>& indices) const;
};

enum class SynthTask { kMotionDirection2, kMotionDirection4, kStaticVsMoving };

SynthTask parse_task(const std::string& name);
std::string task_name(SynthTask task);
std::size_t task_classes(SynthTask task);

// A bright square drifting over a dark noisy background. Direction labels:
// 0 left, 1 right, 2 up, 3 down; static-vs-moving uses 0 static, 1 moving.
// Positions wrap around the canvas edges.
struct SynthTaskConfig {
  SynthTask task = SynthTask::kMotionDirection2;
  std::size_t frames = 8, height = 32, width = 32;
  std::size_t square = 6;
  std::size_t speed = 2;  // pixels per frame
  double noise = 0.05;    // Gaussian noise stddev as a fraction of 255
  std::uint64_t seed = 0;

  void validate() const;
};

// Fully specified render: label, top-left start, and noise drawn from rng.
VideoClip render_clip(const SynthTaskConfig& cfg, std::size_t label, std::size_t start_row, std::size_t start_col,
                      Rng& rng);
// Uniform random label and start position.
VideoClip generate_clip(const SynthTaskConfig& cfg, Rng& rng);
// Clip `index` of the dataset defined by cfg.seed.
VideoClip generate_indexed_clip(const SynthTaskConfig& cfg, std::size_t index);

// "SCTC1" magic, u32 little-endian T, H, W, C, then raw bytes.
inline constexpr std::size_t kClipHeaderBytes = 5 + 4 * 4;
std::vector<std::uint8_t> encode_clip(const VideoClip& clip);
VideoClip decode_clip(const std::vector<std::uint8_t>& bytes);
void write_clip(const VideoClip& clip, const std::string& path);
VideoClip read_clip(const std::string& path);

struct ManifestEntry {
  std::string path;  // as written in the manifest, relative to its directory
  std::size_t label = 0;
};

// Newline-delimited "path<TAB>label".
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path);

// Writes n clips plus manifest.tsv into out_dir; returns the manifest path.
std::string generate_dataset(const SynthTaskConfig& cfg, std::size_t n, const std::string& out_dir);

// Loads every clip listed in a manifest (a file, or a directory holding manifest.tsv).
std::vector<VideoClip> load_dataset(const std::string& manifest_or_dir);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace sct
