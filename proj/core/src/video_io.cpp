// SPDX-License-Identifier: Apache-2.0
#include "sct/video_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "sct/error.hpp"

namespace sct {

namespace fs = std::filesystem;

namespace {

constexpr char kClipMagic[5] = {'S', 'C', 'T', 'C', '1'};
constexpr double kBackground = 24.0;
constexpr double kForeground = 232.0;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw FormatError(std::string(what) + " does not fit the clip header", 0);
  return static_cast<std::uint32_t>(v);
}

}  // namespace

VideoClip VideoClip::select_frames(const std::vector<std::size_t>& indices) const {
  VideoClip out;
  out.frames = indices.size();
  out.height = height;
  out.width = width;
  out.channels = channels;
  out.label = label;
  out.id = id;
  out.pixels.resize(out.frames * frame_bytes());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= frames) throw IndexError("frame index " + std::to_string(indices[i]) + " out of range");
    std::memcpy(out.frame(i), frame(indices[i]), frame_bytes());
  }
  return out;
}

SynthTask parse_task(const std::string& name) {
  if (name == "motion-direction-2") return SynthTask::kMotionDirection2;
  if (name == "motion-direction-4") return SynthTask::kMotionDirection4;
  if (name == "static-vs-moving") return SynthTask::kStaticVsMoving;
  throw ConfigError("unknown task '" + name + "'");
}

std::string task_name(SynthTask task) {
  switch (task) {
    case SynthTask::kMotionDirection2:
      return "motion-direction-2";
    case SynthTask::kMotionDirection4:
      return "motion-direction-4";
    case SynthTask::kStaticVsMoving:
      return "static-vs-moving";
  }
  return "unknown";
}

std::size_t task_classes(SynthTask task) { return task == SynthTask::kMotionDirection4 ? 4 : 2; }

void SynthTaskConfig::validate() const {
  if (frames == 0 || height == 0 || width == 0) throw ConfigError("synthetic clips need positive T, H and W");
  if (square == 0 || square > height || square > width) {
    throw ConfigError("square of " + std::to_string(square) + " px does not fit a " + std::to_string(height) + "x" +
                      std::to_string(width) + " canvas");
  }
  if (noise < 0.0) throw ConfigError("noise must be non-negative");
}

VideoClip render_clip(const SynthTaskConfig& cfg, std::size_t label, std::size_t start_row, std::size_t start_col,
                      Rng& rng) {
  cfg.validate();
  if (label >= task_classes(cfg.task)) throw IndexError("label " + std::to_string(label) + " out of range");
  // Direction as (d_row, d_col) per frame.
  long dr = 0, dc = 0;
  const long v = static_cast<long>(cfg.speed);
  switch (cfg.task) {
    case SynthTask::kMotionDirection2:
    case SynthTask::kMotionDirection4:
      if (label == 0) dc = -v;
      else if (label == 1) dc = v;
      else if (label == 2) dr = -v;
      else dr = v;
      break;
    case SynthTask::kStaticVsMoving:
      if (label == 1) {
        const auto dir = rng.below(4);
        if (dir == 0) dc = -v;
        else if (dir == 1) dc = v;
        else if (dir == 2) dr = -v;
        else dr = v;
      }
      break;
  }
  VideoClip clip;
  clip.frames = cfg.frames;
  clip.height = cfg.height;
  clip.width = cfg.width;
  clip.channels = 3;
  clip.label = label;
  clip.pixels.resize(clip.frames * clip.frame_bytes());
  const long H = static_cast<long>(cfg.height), W = static_cast<long>(cfg.width);
  const double sigma = cfg.noise * 255.0;
  for (std::size_t t = 0; t < cfg.frames; ++t) {
    const long r0 = ((static_cast<long>(start_row) + dr * static_cast<long>(t)) % H + H) % H;
    const long c0 = ((static_cast<long>(start_col) + dc * static_cast<long>(t)) % W + W) % W;
    std::uint8_t* px = clip.frame(t);
    for (long y = 0; y < H; ++y) {
      const bool in_rows = ((y - r0) % H + H) % H < static_cast<long>(cfg.square);
      for (long x = 0; x < W; ++x) {
        const bool inside = in_rows && ((x - c0) % W + W) % W < static_cast<long>(cfg.square);
        const double base = inside ? kForeground : kBackground;
        for (int ch = 0; ch < 3; ++ch) {
          const double value = sigma > 0.0 ? base + sigma * rng.normal() : base;
          px[(y * W + x) * 3 + ch] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
        }
      }
    }
  }
  return clip;
}

VideoClip generate_clip(const SynthTaskConfig& cfg, Rng& rng) {
  cfg.validate();
  std::size_t label = rng.below(task_classes(cfg.task));
  if (cfg.task == SynthTask::kStaticVsMoving && cfg.speed == 0) label = 0;
  const auto row = rng.below(cfg.height);
  const auto col = rng.below(cfg.width);
  return render_clip(cfg, label, row, col, rng);
}

VideoClip generate_indexed_clip(const SynthTaskConfig& cfg, std::size_t index) {
  auto rng = Rng::derive(cfg.seed, index);
  auto clip = generate_clip(cfg, rng);
  std::ostringstream id;
  id << "clip_" << std::setw(5) << std::setfill('0') << index;
  clip.id = id.str();
  return clip;
}

std::vector<std::uint8_t> encode_clip(const VideoClip& clip) {
  const auto payload = clip.frames * clip.frame_bytes();
  if (clip.pixels.size() != payload) throw DimensionError("clip pixel buffer does not match its dimensions");
  std::vector<std::uint8_t> out(std::begin(kClipMagic), std::end(kClipMagic));
  out.reserve(kClipHeaderBytes + payload);
  put_u32(out, checked_u32(clip.frames, "frame count"));
  put_u32(out, checked_u32(clip.height, "height"));
  put_u32(out, checked_u32(clip.width, "width"));
  put_u32(out, checked_u32(clip.channels, "channel count"));
  out.insert(out.end(), clip.pixels.begin(), clip.pixels.end());
  return out;
}

VideoClip decode_clip(const std::vector<std::uint8_t>& bytes) {
  for (std::size_t i = 0; i < sizeof(kClipMagic); ++i) {
    if (i >= bytes.size()) throw FormatError("clip file truncated inside the magic", bytes.size());
    if (bytes[i] != static_cast<std::uint8_t>(kClipMagic[i])) throw FormatError("bad clip magic", i);
  }
  if (bytes.size() < kClipHeaderBytes) throw FormatError("clip file truncated inside the header", bytes.size());
  VideoClip clip;
  clip.frames = get_u32(&bytes[5]);
  clip.height = get_u32(&bytes[9]);
  clip.width = get_u32(&bytes[13]);
  clip.channels = get_u32(&bytes[17]);
  if (clip.channels == 0) throw FormatError("clip header has zero channels", 17);
  const auto payload = static_cast<unsigned __int128>(clip.frames) * clip.height * clip.width * clip.channels;
  const auto have = bytes.size() - kClipHeaderBytes;
  if (payload > have) throw FormatError("clip file truncated inside the pixel data", bytes.size());
  if (payload < have) {
    throw FormatError("trailing bytes after the pixel data", kClipHeaderBytes + static_cast<std::size_t>(payload));
  }
  clip.pixels.assign(bytes.begin() + kClipHeaderBytes, bytes.end());
  return clip;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

void write_clip(const VideoClip& clip, const std::string& path) { write_file_bytes(path, encode_clip(clip)); }

VideoClip read_clip(const std::string& path) {
  auto clip = decode_clip(read_file_bytes(path));
  clip.id = fs::path(path).stem().string();
  return clip;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected path<TAB>label", lineno);
    }
    ManifestEntry e;
    e.path = line.substr(0, tab);
    try {
      std::size_t used = 0;
      const auto label_text = line.substr(tab + 1);
      e.label = std::stoul(label_text, &used);
      if (used != label_text.size()) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": bad label", lineno);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create manifest " + path);
  for (const auto& e : entries) out << e.path << '\t' << e.label << '\n';
  if (!out) throw IoError("write failed for " + path);
}

std::string generate_dataset(const SynthTaskConfig& cfg, std::size_t n, const std::string& out_dir) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory " + out_dir + ": " + ec.message());
  std::vector<ManifestEntry> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto clip = generate_indexed_clip(cfg, i);
    const auto name = clip.id + ".sctc";
    write_clip(clip, (fs::path(out_dir) / name).string());
    entries.push_back({name, clip.label});
  }
  const auto manifest = (fs::path(out_dir) / "manifest.tsv").string();
  write_manifest(entries, manifest);
  return manifest;
}

std::vector<VideoClip> load_dataset(const std::string& manifest_or_dir) {
  fs::path manifest(manifest_or_dir);
  if (fs::is_directory(manifest)) manifest /= "manifest.tsv";
  const auto entries = read_manifest(manifest.string());
  std::vector<VideoClip> clips;
  clips.reserve(entries.size());
  for (const auto& e : entries) {
    auto clip = read_clip((manifest.parent_path() / e.path).string());
    clip.label = e.label;
    clips.push_back(std::move(clip));
  }
  return clips;
}

}  // namespace sct
