// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "sct/checkpoint.hpp"
#include "sct/error.hpp"
#include "sct/model.hpp"
#include "sct/video_io.hpp"

namespace sct {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sct_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SynthTaskConfig clean(SynthTask task, std::size_t speed = 2) {
  SynthTaskConfig c;
  c.task = task;
  c.speed = speed;
  c.noise = 0.0;
  return c;
}

TEST(Synth, ZeroSpeedIsStatic) {
  auto cfg = clean(SynthTask::kStaticVsMoving, 0);
  for (std::size_t i = 0; i < 50; ++i) {
    cfg.seed = i;
    auto clip = generate_indexed_clip(cfg, i);
    EXPECT_EQ(clip.label, 0u);
    for (std::size_t t = 1; t < clip.frames; ++t)
      EXPECT_TRUE(std::equal(clip.frame(t), clip.frame(t) + clip.frame_bytes(), clip.frame(0)));
  }
}

TEST(Synth, LeftAndRightShareFramesUnderMatchedStarts) {
  const auto cfg = clean(SynthTask::kMotionDirection2);
  Rng rng(0);
  // Frame 3 of a left-moving square from column 20 sits at column 14, which
  // is frame 0 of a right-moving square started there.
  auto left = render_clip(cfg, 0, 5, 20, rng);
  auto right = render_clip(cfg, 1, 5, 14, rng);
  EXPECT_TRUE(std::equal(left.frame(3), left.frame(3) + left.frame_bytes(), right.frame(0)));
  EXPECT_FALSE(std::equal(left.frame(4), left.frame(4) + left.frame_bytes(), right.frame(1)));
}

TEST(Synth, SquareMovesBySpeedAndWraps) {
  auto cfg = clean(SynthTask::kMotionDirection4, 3);
  Rng rng(0);
  auto down = render_clip(cfg, 3, 30, 0, rng);
  // Frame 1 starts at row 33 mod 32 = 1; row 0 belongs to the square only in
  // frame 0 (rows 30..35 wrap to 30, 31, 0..3).
  auto lum = [&](std::size_t t, std::size_t r, std::size_t c) { return down.frame(t)[(r * 32 + c) * 3]; };
  EXPECT_GT(lum(0, 30, 0), 128);
  EXPECT_GT(lum(0, 3, 0), 128);
  EXPECT_LT(lum(0, 4, 0), 128);
  EXPECT_LT(lum(1, 0, 0), 128);
  EXPECT_GT(lum(1, 1, 0), 128);
  EXPECT_GT(lum(1, 6, 0), 128);
}

TEST(Synth, ClassBalance) {
  for (auto task : {SynthTask::kMotionDirection2, SynthTask::kMotionDirection4}) {
    SynthTaskConfig cfg;
    cfg.task = task;
    cfg.seed = 3;
    cfg.frames = 1, cfg.height = cfg.width = 8, cfg.square = 2;
    const std::size_t n = 10000, k = task_classes(task);
    std::vector<std::size_t> counts(k);
    for (std::size_t i = 0; i < n; ++i) ++counts[generate_indexed_clip(cfg, i).label];
    for (auto c : counts) EXPECT_NEAR(static_cast<double>(c) / n, 1.0 / k, 0.02);
  }
}

TEST(Synth, ConfigErrors) {
  SynthTaskConfig cfg;
  cfg.square = 40;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(parse_task("spin"), ConfigError);
  EXPECT_EQ(parse_task(task_name(SynthTask::kMotionDirection4)), SynthTask::kMotionDirection4);
  Rng rng(0);
  EXPECT_THROW(render_clip(SynthTaskConfig{}, 2, 0, 0, rng), IndexError);
}

TEST(Synth, IndexedClipsAreReproducible) {
  SynthTaskConfig cfg;
  cfg.seed = 5;
  auto a = generate_indexed_clip(cfg, 17), b = generate_indexed_clip(cfg, 17);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_EQ(a.id, "clip_00017");
  EXPECT_NE(generate_indexed_clip(cfg, 18).pixels, a.pixels);
}

TEST(ClipFormat, HeaderArithmetic) {
  VideoClip clip;
  clip.frames = 24, clip.height = clip.width = 224;
  clip.pixels.resize(24 * 224 * 224 * 3);
  EXPECT_EQ(encode_clip(clip).size(), kClipHeaderBytes + 24u * 224 * 224 * 3);
  EXPECT_EQ(kClipHeaderBytes, 21u);
}

TEST(ClipFormat, RoundTripIsBitExact) {
  SynthTaskConfig cfg;
  auto clip = generate_indexed_clip(cfg, 0);
  const auto dir = scratch_dir("clip");
  const auto path = (dir / "a.sctc").string();
  write_clip(clip, path);
  auto back = read_clip(path);
  EXPECT_EQ(back.pixels, clip.pixels);
  EXPECT_EQ(back.frames, clip.frames);
  EXPECT_EQ(back.height, clip.height);
  EXPECT_EQ(encode_clip(back), read_file_bytes(path));
  fs::remove_all(dir);
}

TEST(ClipFormat, MalformedInputReportsOffset) {
  SynthTaskConfig cfg;
  cfg.frames = 2, cfg.height = cfg.width = 8, cfg.square = 2;
  const auto bytes = encode_clip(generate_indexed_clip(cfg, 0));
  auto expect_offset = [](std::vector<std::uint8_t> b, std::size_t offset) {
    try {
      decode_clip(b);
      ADD_FAILURE() << "expected FormatError";
    } catch (const FormatError& e) {
      EXPECT_EQ(e.offset(), offset) << e.what();
    }
  };
  auto bad = bytes;
  bad[2] = 'X';
  expect_offset(bad, 2);
  expect_offset({bytes.begin(), bytes.begin() + 10}, 10);
  expect_offset({bytes.begin(), bytes.end() - 1}, bytes.size() - 1);
  auto longer = bytes;
  longer.push_back(0);
  expect_offset(longer, bytes.size());
  EXPECT_THROW(read_clip("/nonexistent/clip.sctc"), IoError);
}

TEST(Manifest, DatasetRoundTrip) {
  const auto dir = scratch_dir("manifest");
  SynthTaskConfig cfg;
  cfg.seed = 2;
  const auto manifest = generate_dataset(cfg, 6, dir.string());
  auto entries = read_manifest(manifest);
  ASSERT_EQ(entries.size(), 6u);
  auto clips = load_dataset(dir.string());
  ASSERT_EQ(clips.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto want = generate_indexed_clip(cfg, i);
    EXPECT_EQ(clips[i].pixels, want.pixels);
    EXPECT_EQ(clips[i].label, entries[i].label);
    EXPECT_EQ(clips[i].label, want.label);
  }
  std::ofstream(dir / "bad.tsv") << "a.sctc\tx\n";
  EXPECT_THROW(read_manifest((dir / "bad.tsv").string()), FormatError);
  std::ofstream(dir / "bad2.tsv") << "no-tab-here\n";
  EXPECT_THROW(read_manifest((dir / "bad2.tsv").string()), FormatError);
  fs::remove_all(dir);
}

TEST(SelectFrames, CopiesInOrder) {
  SynthTaskConfig cfg;
  auto clip = generate_indexed_clip(cfg, 1);
  auto sub = clip.select_frames({3, 0});
  EXPECT_EQ(sub.frames, 2u);
  EXPECT_TRUE(std::equal(sub.frame(0), sub.frame(0) + sub.frame_bytes(), clip.frame(3)));
  EXPECT_TRUE(std::equal(sub.frame(1), sub.frame(1) + sub.frame_bytes(), clip.frame(0)));
  EXPECT_THROW(clip.select_frames({8}), IndexError);
}

TEST(Checkpoint, SecondCycleIsBitExact) {
  const auto cfg = model_preset("sct-tiny");
  auto a = SctModel::build(cfg, 1);
  auto b = SctModel::build(cfg, 2);
  auto c = SctModel::build(cfg, 3);
  decode_checkpoint(encode_checkpoint(a.params()), b.params());
  // b now holds a's values rounded to float; a further cycle changes nothing.
  const auto bytes = encode_checkpoint(b.params());
  decode_checkpoint(bytes, c.params());
  EXPECT_EQ(encode_checkpoint(c.params()), bytes);
  for (std::size_t i = 0; i < b.params().all().size(); ++i) {
    const auto x = b.params().all()[i].tensor.data(), y = c.params().all()[i].tensor.data();
    EXPECT_TRUE(std::equal(x.begin(), x.end(), y.begin()));
    const auto orig = a.params().all()[i].tensor.data();
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(x[k], static_cast<double>(static_cast<float>(orig[k])));
  }
  SynthTaskConfig synth;
  auto clip = generate_indexed_clip(synth, 0);
  auto lb = b.forward(clip), lc = c.forward(clip);
  EXPECT_EQ(lb[0], lc[0]);
  EXPECT_EQ(lb[1], lc[1]);
}

TEST(Checkpoint, FileRoundTripAndErrors) {
  const auto cfg = model_preset("sct-tiny");
  auto a = SctModel::build(cfg, 4);
  const auto dir = scratch_dir("ckpt");
  const auto path = (dir / "m.sctw").string();
  save_checkpoint(a.params(), path);
  auto bytes = read_file_bytes(path);
  EXPECT_EQ(bytes, encode_checkpoint(a.params()));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 5), "SCTW1");

  auto b = SctModel::build(cfg, 5);
  const auto before = encode_checkpoint(b.params());
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_checkpoint(truncated, b.params()), FormatError);
  EXPECT_EQ(encode_checkpoint(b.params()), before);
  auto other_cfg = cfg;
  other_cfg.embed_dim = 16;
  auto other = SctModel::build(other_cfg, 0);
  EXPECT_THROW(decode_checkpoint(bytes, other.params()), FormatError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic, b.params()), FormatError);
  EXPECT_THROW(load_checkpoint(b.params(), (dir / "missing.sctw").string()), IoError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace sct
