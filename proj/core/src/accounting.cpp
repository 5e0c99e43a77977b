// SPDX-License-Identifier: Apache-2.0
#include "sct/accounting.hpp"

#include <cstdio>
#include <sstream>

#include "sct/chunk_attention.hpp"
#include "sct/error.hpp"
#include "sct/model.hpp"

namespace sct {

namespace {

using u64 = std::uint64_t;

void add_to(CostReport& r, const std::string& name, u64 value) {
  r.total += value;
  for (auto& [k, v] : r.modules) {
    if (k == name) {
      v += value;
      return;
    }
  }
  r.modules.emplace_back(name, value);
}

u64 mlp_params(u64 dim, u64 hidden) { return dim * hidden + hidden + hidden * dim + dim; }
u64 block_params(u64 dim, u64 hidden) { return 4 * dim * dim + 4 * dim + mlp_params(dim, hidden); }

// 2 * MAC of a standard pre-LN block over `rows` tokens, excluding attention scores.
u64 block_linear_flops(u64 rows, u64 dim, u64 hidden) { return 2 * rows * (4 * dim * dim + 2 * dim * hidden); }

}  // namespace

u64 CostReport::module(const std::string& name) const {
  for (const auto& [k, v] : modules)
    if (k == name) return v;
  return 0;
}

CostReport count_params(const ParameterStore& store) {
  CostReport r;
  for (const auto& p : store.all()) {
    const auto first = p.name.find('.');
    const bool staged = p.name.rfind("stage", 0) == 0;
    const auto end = staged && first != std::string::npos ? p.name.find('.', first + 1) : first;
    add_to(r, p.name.substr(0, end), p.tensor.numel());
  }
  return r;
}

CostReport count_params(const SctConfig& cfg) {
  const auto geo = stage_geometry(cfg);
  CostReport r;
  for (std::size_t s = 0; s < geo.size(); ++s) {
    const auto& g = geo[s];
    const auto prefix = "stage" + std::to_string(s + 1);
    const u64 D = g.dim, L = g.layout.tokens_per_chunk();
    u64 vilt = L * D + cfg.vilt_blocks * block_params(D, g.mlp);
    if (s == 0) vilt += g.in_dim * D;
    add_to(r, prefix + ".vilt", vilt);
    add_to(r, prefix + ".lsh", 3 * D * D + 4 * D + mlp_params(D, g.mlp));
    if (g.pools) add_to(r, prefix + ".pool", 8 * D * D);
    add_to(r, prefix + ".shift", g.temporal_dim + cfg.shift_layers * block_params(g.temporal_dim, g.temporal_mlp));
  }
  const u64 Dc = cfg.clip_dim, T = cfg.frames;
  add_to(r, "clip", cfg.final_dim() * Dc + Dc + (T + 1) * Dc + cfg.clip_blocks * block_params(Dc, cfg.clip_mlp) +
                        2 * Dc + Dc * cfg.num_classes + cfg.num_classes);
  return r;
}

CostReport estimate_flops(const SctConfig& cfg) {
  const auto geo = stage_geometry(cfg);
  const u64 T = cfg.frames;
  CostReport r;
  for (std::size_t s = 0; s < geo.size(); ++s) {
    const auto& g = geo[s];
    const auto prefix = "stage" + std::to_string(s + 1);
    const u64 D = g.dim, M = g.mlp;
    const u64 slots = g.layout.slot_count(), L = g.layout.tokens_per_chunk(), chunks = g.layout.chunk_count();

    u64 vilt = s == 0 ? 2 * T * slots * g.in_dim * D : 0;
    vilt += cfg.vilt_blocks * (block_linear_flops(T * slots, D, M) + 4 * T * chunks * L * L * D);
    add_to(r, prefix + ".vilt", vilt);

    const u64 S = g.tokens();
    u64 global = 2 * T * S * 3 * D * D + 4 * T * S * D * M;
    if (cfg.global_attention == GlobalAttention::kDense) {
      global += 4 * T * S * S * D;
    } else {
      const u64 heads = cfg.heads_lsh, dh = D / heads;
      LshPlan plan;
      plan.chunk_size = effective_chunk(cfg.lsh, S);
      plan.n_chunks = std::max<u64>(1, (S + plan.chunk_size - 1) / plan.chunk_size);
      plan.attend_previous = cfg.lsh.attend_previous_chunk;
      const u64 nb = resolve_buckets(cfg.lsh, S);
      const u64 hashing = nb > 1 ? 2 * S * dh * (nb / 2) : 0;
      const u64 attend = 4 * plan.n_chunks * plan.chunk_size * plan.keys_per_chunk() * dh;
      global += T * heads * cfg.lsh.n_rounds * (hashing + attend);
    }
    add_to(r, prefix + ".lsh", global);

    if (g.pools) add_to(r, prefix + ".pool", 2 * T * g.out_tokens() * 8 * D * D);

    const u64 N = g.out_tokens() + 1, W = g.temporal_dim;
    add_to(r, prefix + ".shift", cfg.shift_layers * (block_linear_flops(T * N, W, g.temporal_mlp) + 4 * T * N * N * W));
  }
  const u64 Dc = cfg.clip_dim, S = T + 1;
  add_to(r, "clip", 2 * T * cfg.final_dim() * Dc +
                        cfg.clip_blocks * (block_linear_flops(S, Dc, cfg.clip_mlp) + 4 * S * S * Dc) +
                        2 * Dc * cfg.num_classes);
  return r;
}

std::string format_report(const CostReport& report, const std::string& unit, double scale) {
  std::ostringstream o;
  char buf[160];
  for (const auto& [k, v] : report.modules) {
    std::snprintf(buf, sizeof(buf), "%-16s %14llu  %10.4f %s  %6.2f%%\n", k.c_str(), static_cast<unsigned long long>(v),
                  static_cast<double>(v) / scale, unit.c_str(),
                  report.total ? 100.0 * static_cast<double>(v) / static_cast<double>(report.total) : 0.0);
    o << buf;
  }
  std::snprintf(buf, sizeof(buf), "%-16s %14llu  %10.4f %s\n", "total", static_cast<unsigned long long>(report.total),
                static_cast<double>(report.total) / scale, unit.c_str());
  o << buf;
  return o.str();
}

}  // namespace sct
