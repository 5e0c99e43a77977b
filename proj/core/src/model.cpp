// SPDX-License-Identifier: Apache-2.0
#include "sct/model.hpp"

#include <algorithm>

#include "sct/error.hpp"

namespace sct {

namespace {
std::size_t ceil_half(std::size_t v) { return (v + 1) / 2; }
}  // namespace

std::vector<StageGeometry> stage_geometry(const SctConfig& cfg) {
  cfg.validate();
  std::vector<StageGeometry> out;
  std::size_t rows = cfg.height / cfg.patch_h, cols = cfg.width / cfg.patch_w;
  for (std::size_t s = 0; s < cfg.stages; ++s) {
    StageGeometry g;
    g.grid_rows = rows;
    g.grid_cols = cols;
    g.dim = cfg.stage_dim(s);
    g.mlp = cfg.stage_mlp(s);
    g.in_dim = s == 0 ? cfg.patch_dim() : g.dim;
    g.layout = ChunkLayout::make(rows, cols, cfg.chunk_rows, cfg.chunk_cols, cfg.patch_h, cfg.patch_w);
    g.pools = cfg.pools_after(s);
    g.out_rows = g.pools ? ceil_half(rows) : rows;
    g.out_cols = g.pools ? ceil_half(cols) : cols;
    g.temporal_dim = cfg.temporal_dim(s);
    g.temporal_mlp = cfg.temporal_mlp(s);
    out.push_back(g);
    rows = g.out_rows;
    cols = g.out_cols;
  }
  return out;
}

SctModel SctModel::build(const SctConfig& cfg, std::uint64_t seed) {
  SctModel m;
  m.config_ = cfg;
  m.store_ = ParameterStore(cfg.init);
  m.geometry_ = stage_geometry(cfg);
  Rng rng(seed);
  for (std::size_t s = 0; s < cfg.stages; ++s) {
    const auto& g = m.geometry_[s];
    const auto prefix = "stage" + std::to_string(s + 1);
    StageParams p;
    p.vilt = ViltParams(m.store_, prefix + ".vilt", g.in_dim, g.dim, g.mlp, cfg.vilt_blocks, cfg.heads_vilt,
                        g.layout.tokens_per_chunk(), s == 0, rng);
    p.global = LshAttentionParams(m.store_, prefix + ".lsh", g.dim, g.mlp, cfg.heads_lsh, rng);
    if (g.pools) p.pool = PoolParams(m.store_, prefix + ".pool", g.dim, rng);
    p.temporal = ShiftedMsaParams(m.store_, prefix + ".shift", g.temporal_dim, g.temporal_mlp, cfg.heads_shift,
                                  cfg.shift_layers, cfg.shift_frames, cfg.attn_residual, rng);
    m.stages_.push_back(std::move(p));
  }
  m.clip_ = ClipEncoderParams(m.store_, "clip", cfg.frames, cfg.final_dim(), cfg.clip_dim, cfg.clip_mlp,
                              cfg.clip_blocks, cfg.heads_clip, cfg.num_classes, cfg.dropout, rng);
  return m;
}

Tensor SctModel::run_stage(std::size_t s, const Tensor& input, AttentionTrace* trace) const {
  const auto& g = geometry_[s];
  const auto& p = stages_[s];
  const auto T = input.dim(0);
  auto chunks = partition_frame(input, g.layout);
  auto tokens = unpartition_frame(vilt_forward(chunks, p.vilt), g.layout, T);
  if (config_.global_attention == GlobalAttention::kLsh) {
    auto lsh = config_.lsh;
    lsh.seed += s;
    tokens = lsh_attention(tokens, p.global, lsh);
  } else {
    tokens = dense_attention_oracle(tokens, p.global);
  }
  if (g.pools) tokens = linear_pool(tokens, g.grid_rows, g.grid_cols, p.pool);
  auto framed = prepend_cls(tokens, p.temporal.cls);
  std::vector<AttentionMap>* maps = trace ? &trace->stages[s].layers : nullptr;
  return config_.temporal_attention == TemporalAttention::kShifted ? shifted_msa(framed, p.temporal, maps)
                                                                    : standard_msa(framed, p.temporal, maps);
}

Tensor SctModel::forward_from_stage(std::size_t stage, const Tensor& input, const ForwardOptions& options) const {
  const auto n = config_.stages;
  if (stage > n) throw IndexError("stage " + std::to_string(stage) + " out of range");
  if (input.dim(0) != config_.frames) {
    throw DimensionError("model expects " + std::to_string(config_.frames) + " frames, got " +
                         std::to_string(input.dim(0)));
  }
  const auto T = config_.frames;
  if (options.trace) {
    options.trace->stages.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      options.trace->stages[s].grid_rows = geometry_[s].out_rows;
      options.trace->stages[s].grid_cols = geometry_[s].out_cols;
      if (s >= stage) options.trace->stages[s].layers.clear();
    }
  }
  if (options.stage_inputs) options.stage_inputs->resize(n + 1);
  Tensor x = input;
  for (std::size_t s = stage; s < n; ++s) {
    const auto& g = geometry_[s];
    const Shape want{T, g.grid_rows, g.grid_cols, g.in_dim};
    if (x.shape() != want) {
      throw DimensionError("stage " + std::to_string(s) + " expects " + to_string(want) + ", got " +
                           to_string(x.shape()));
    }
    if (options.stage_inputs) (*options.stage_inputs)[s] = x.detach();
    auto out = run_stage(s, x, options.trace);
    const auto N = g.out_tokens(), W = g.temporal_dim;
    if (s + 1 < n) {
      x = reshape(slice(out, 1, 1, N + 1), {T, g.out_rows, g.out_cols, W});
    } else {
      x = reshape(slice(out, 1, 0, 1), {T, W});
    }
  }
  if (stage == n && x.shape() != Shape{T, config_.final_dim()}) {
    throw DimensionError("clip encoder expects features " + to_string({T, config_.final_dim()}) + ", got " +
                         to_string(x.shape()));
  }
  if (options.stage_inputs) (*options.stage_inputs)[n] = x.detach();
  return clip_encode(x, clip_, options.train, options.rng, options.trace ? &options.trace->clip : nullptr);
}

Tensor SctModel::forward_patches(const Tensor& patches, const ForwardOptions& options) const {
  return forward_from_stage(0, patches, options);
}

Tensor SctModel::forward(const VideoClip& clip, const ForwardOptions& options) const {
  if (clip.frames != config_.frames || clip.height != config_.height || clip.width != config_.width ||
      clip.channels != SctConfig::kChannels) {
    throw DimensionError("clip " + std::to_string(clip.frames) + "x" + std::to_string(clip.height) + "x" +
                         std::to_string(clip.width) + "x" + std::to_string(clip.channels) + " does not match model " +
                         std::to_string(config_.frames) + "x" + std::to_string(config_.height) + "x" +
                         std::to_string(config_.width) + "x3");
  }
  return forward_patches(clip_to_patches(clip, config_.patch_h, config_.patch_w), options);
}

Tensor SctModel::frame_features(const Tensor& patches, const ForwardOptions& options) const {
  std::vector<Tensor> inputs;
  ForwardOptions opt = options;
  opt.stage_inputs = &inputs;
  forward_from_stage(0, patches, opt);
  return inputs.back();
}

Tensor clip_to_patches(const VideoClip& clip, std::size_t ph, std::size_t pw) {
  if (ph == 0 || pw == 0 || clip.height % ph != 0 || clip.width % pw != 0) {
    throw DimensionError("clip " + std::to_string(clip.height) + "x" + std::to_string(clip.width) +
                         " is not divisible into " + std::to_string(ph) + "x" + std::to_string(pw) + " patches");
  }
  if (clip.pixels.size() != clip.frames * clip.frame_bytes()) {
    throw DimensionError("clip pixel buffer does not match its dimensions");
  }
  const auto R = clip.height / ph, C = clip.width / pw, ch = clip.channels;
  const auto pd = ph * pw * ch;
  std::vector<double> out(clip.frames * R * C * pd);
  for (std::size_t t = 0; t < clip.frames; ++t) {
    const auto* px = clip.frame(t);
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t c = 0; c < C; ++c) {
        double* dst = out.data() + ((t * R + r) * C + c) * pd;
        for (std::size_t i = 0; i < ph; ++i) {
          for (std::size_t j = 0; j < pw; ++j) {
            const auto* src = px + ((r * ph + i) * clip.width + c * pw + j) * ch;
            for (std::size_t k = 0; k < ch; ++k) *dst++ = src[k] / 127.5 - 1.0;
          }
        }
      }
    }
  }
  return Tensor({clip.frames, R, C, pd}, std::move(out));
}

std::size_t argmax(std::span<const double> values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace sct
