// SPDX-License-Identifier: Apache-2.0
#include "sct/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sct/error.hpp"
#include "sct/random.hpp"

namespace sct {

namespace {

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

}  // namespace

void LshConfig::validate() const {
  if (chunk_size < 1) throw ConfigError("LSH chunk_size must be at least 1");
  if (n_rounds < 1) throw ConfigError("LSH n_rounds must be at least 1");
  if (n_buckets != 0 && !is_power_of_two(n_buckets)) {
    throw ConfigError("LSH n_buckets must be a power of two, got " + std::to_string(n_buckets));
  }
}

std::size_t effective_chunk(const LshConfig& cfg, std::size_t seq_len) {
  return std::max<std::size_t>(1, std::min(cfg.chunk_size, seq_len));
}

std::size_t resolve_buckets(const LshConfig& cfg, std::size_t seq_len) {
  if (cfg.n_buckets != 0) return cfg.n_buckets;
  std::size_t want = 2 * std::max<std::size_t>(1, ceil_div(seq_len, cfg.chunk_size));
  std::size_t nb = 2;
  while (nb < want) nb *= 2;
  return nb;
}

std::vector<int> angular_lsh_hash(std::span<const double> vectors, std::size_t count, std::size_t dim,
                                  std::size_t n_buckets, std::uint64_t seed, std::size_t round) {
  if (vectors.size() != count * dim) throw DimensionError("angular_lsh_hash: vector buffer size mismatch");
  std::vector<int> ids(count, 0);
  if (n_buckets <= 1) return ids;
  if (n_buckets % 2 != 0) throw ConfigError("angular_lsh_hash needs an even bucket count");
  const auto half = n_buckets / 2;
  auto rng = Rng::derive(seed, round);
  std::vector<double> rotation(dim * half);
  for (auto& r : rotation) r = rng.normal();
  std::vector<double> proj(half);
  flop_counter() += 2 * count * dim * half;
  for (std::size_t i = 0; i < count; ++i) {
    std::fill(proj.begin(), proj.end(), 0.0);
    const double* x = vectors.data() + i * dim;
    for (std::size_t k = 0; k < dim; ++k) {
      const double xv = x[k];
      const double* row = rotation.data() + k * half;
      for (std::size_t j = 0; j < half; ++j) proj[j] += xv * row[j];
    }
    std::size_t best = 0;
    double best_val = proj[0];
    for (std::size_t j = 1; j < half; ++j)
      if (proj[j] > best_val) best_val = proj[j], best = j;
    for (std::size_t j = 0; j < half; ++j)
      if (-proj[j] > best_val) best_val = -proj[j], best = half + j;
    ids[i] = static_cast<int>(best);
  }
  return ids;
}

std::vector<int> angular_lsh_hash(const Tensor& vectors, const LshConfig& cfg, std::size_t round) {
  if (vectors.rank() != 2) throw DimensionError("angular_lsh_hash expects [S, D], got " + to_string(vectors.shape()));
  const auto S = vectors.dim(0);
  return angular_lsh_hash(vectors.data(), S, vectors.dim(1), resolve_buckets(cfg, S), cfg.seed, round);
}

std::vector<std::int64_t> bucket_sort_permutation(const std::vector<int>& buckets) {
  std::vector<std::int64_t> perm(buckets.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](std::int64_t a, std::int64_t b) {
    return buckets[static_cast<std::size_t>(a)] < buckets[static_cast<std::size_t>(b)];
  });
  return perm;
}

std::vector<std::int64_t> invert_permutation(const std::vector<std::int64_t>& perm) {
  std::vector<std::int64_t> inv(perm.size(), -1);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto p = perm[i];
    if (p < 0) continue;
    if (static_cast<std::size_t>(p) >= perm.size() || inv[static_cast<std::size_t>(p)] != -1) {
      throw ContractError("invert_permutation: input is not a permutation");
    }
    inv[static_cast<std::size_t>(p)] = static_cast<std::int64_t>(i);
  }
  return inv;
}

std::int64_t LshPlan::previous_chunk(std::size_t c) const {
  if (!attend_previous || n_chunks <= 1) return -1;
  return static_cast<std::int64_t>((c + n_chunks - 1) % n_chunks);
}

bool LshPlan::attends(std::size_t round, std::size_t i, std::size_t j) const {
  const auto& r = rounds.at(round);
  const auto ci = static_cast<std::size_t>(r.slot[i]) / chunk_size;
  const auto cj = static_cast<std::size_t>(r.slot[j]) / chunk_size;
  return ci == cj || previous_chunk(ci) == static_cast<std::int64_t>(cj);
}

LshPlan plan_lsh(std::span<const double> qk, std::size_t seq_len, std::size_t dim, const LshConfig& cfg) {
  cfg.validate();
  LshPlan plan;
  plan.seq_len = seq_len;
  plan.chunk_size = effective_chunk(cfg, seq_len);
  plan.n_chunks = std::max<std::size_t>(1, ceil_div(seq_len, plan.chunk_size));
  plan.n_buckets = resolve_buckets(cfg, seq_len);
  plan.attend_previous = cfg.attend_previous_chunk;
  for (std::size_t r = 0; r < cfg.n_rounds; ++r) {
    LshRoundPlan round;
    round.buckets = angular_lsh_hash(qk, seq_len, dim, plan.n_buckets, cfg.seed, r);
    round.order = bucket_sort_permutation(round.buckets);
    round.slot = invert_permutation(round.order);
    round.order.resize(plan.n_chunks * plan.chunk_size, -1);
    plan.rounds.push_back(std::move(round));
  }
  return plan;
}

Tensor lsh_attend(const Tensor& qk, const Tensor& v, const LshConfig& cfg, const KeyMask* token_mask,
                  std::vector<LshPlan>* plans_out) {
  cfg.validate();
  if (qk.rank() != 3 || qk.shape() != v.shape()) {
    throw DimensionError("lsh_attend expects matching [B, S, d] qk and v, got " + to_string(qk.shape()) + " and " +
                         to_string(v.shape()));
  }
  const auto B = qk.dim(0), S = qk.dim(1), d = qk.dim(2);
  std::size_t mask_div = 1;
  if (token_mask) {
    if (token_mask->keys != S || token_mask->rows == 0 || B % token_mask->rows != 0) {
      throw DimensionError("lsh_attend: token mask does not match batch/sequence");
    }
    mask_div = B / token_mask->rows;
  }
  std::vector<LshPlan> plans;
  plans.reserve(B);
  const auto qk_data = qk.data();
  for (std::size_t b = 0; b < B; ++b) plans.push_back(plan_lsh(qk_data.subspan(b * S * d, S * d), S, d, cfg));

  const auto& p0 = plans.front();
  const auto cs = p0.chunk_size, nc = p0.n_chunks, kc = p0.keys_per_chunk();
  const auto Sp = nc * cs;
  const auto rounds = cfg.n_rounds;
  const bool with_lse = rounds > 1;
  const auto cols = d + (with_lse ? 1 : 0);

  auto qk_flat = reshape(qk, {B * S, d});
  auto key_flat = reshape(l2_normalize(qk), {B * S, d});
  auto v_flat = reshape(v, {B * S, d});

  std::vector<Tensor> outs, lses;
  for (std::size_t r = 0; r < rounds; ++r) {
    std::vector<std::int64_t> q_idx(B * Sp), k_idx(B * nc * kc), unsort(B * S);
    KeyMask mask;
    mask.rows = B * nc;
    mask.keys = kc;
    mask.valid.assign(B * nc * kc, 0);
    for (std::size_t b = 0; b < B; ++b) {
      const auto& plan = plans[b].rounds[r];
      const auto base = static_cast<std::int64_t>(b * S);
      auto global = [&](std::int64_t o) { return o < 0 ? std::int64_t{-1} : base + o; };
      for (std::size_t i = 0; i < Sp; ++i) q_idx[b * Sp + i] = global(plan.order[i]);
      for (std::size_t c = 0; c < nc; ++c) {
        const auto row = b * nc + c;
        const std::int64_t prev = plans[b].previous_chunk(c);
        for (std::size_t j = 0; j < kc; ++j) {
          const auto src_chunk = j < cs ? c : static_cast<std::size_t>(prev);
          const auto o = plan.order[src_chunk * cs + j % cs];
          k_idx[row * kc + j] = global(o);
          const bool real = o >= 0 && (!token_mask || token_mask->allows(b / mask_div, static_cast<std::size_t>(o)));
          mask.valid[row * kc + j] = real ? 1 : 0;
        }
      }
      for (std::size_t p = 0; p < S; ++p) unsort[b * S + p] = static_cast<std::int64_t>(b * Sp) + plan.slot[p];
    }
    AttentionOptions opt;
    opt.scale = 1.0 / std::sqrt(static_cast<double>(d));
    opt.key_mask = &mask;
    opt.with_lse = with_lse;
    if (!cfg.include_self) {
      opt.query_ids = &q_idx;
      opt.key_ids = &k_idx;
    }
    auto q = reshape(gather_rows(qk_flat, q_idx), {B * nc, cs, d});
    auto k = reshape(gather_rows(key_flat, k_idx), {B * nc, kc, d});
    auto vv = reshape(gather_rows(v_flat, k_idx), {B * nc, kc, d});
    auto att = scaled_dot_attention(q, k, vv, opt);
    auto back = gather_rows(reshape(att, {B * Sp, cols}), unsort);
    if (!with_lse) {
      outs.push_back(back);
    } else {
      outs.push_back(slice(back, 1, 0, d));
      lses.push_back(slice(back, 1, d, d + 1));
    }
  }
  if (plans_out) *plans_out = std::move(plans);
  if (!with_lse) return reshape(outs.front(), {B, S, d});
  auto weights = softmax(concat(lses, 1), 1);
  Tensor total;
  for (std::size_t r = 0; r < rounds; ++r) {
    auto term = mul(outs[r], slice(weights, 1, r, r + 1));
    total = total.defined() ? add(total, term) : term;
  }
  return reshape(total, {B, S, d});
}

Tensor dense_attend(const Tensor& qk, const Tensor& v, const KeyMask* token_mask, bool include_self) {
  if (qk.rank() != 3 || qk.shape() != v.shape()) {
    throw DimensionError("dense_attend expects matching [B, S, d] qk and v");
  }
  const auto B = qk.dim(0), S = qk.dim(1), d = qk.dim(2);
  AttentionOptions opt;
  opt.scale = 1.0 / std::sqrt(static_cast<double>(d));
  opt.key_mask = token_mask;
  std::vector<std::int64_t> ids;
  if (!include_self) {
    ids.resize(B * S);
    std::iota(ids.begin(), ids.end(), 0);
    opt.query_ids = &ids;
    opt.key_ids = &ids;
  }
  return scaled_dot_attention(qk, l2_normalize(qk), v, opt);
}

LshAttentionParams::LshAttentionParams(ParameterStore& store, const std::string& prefix, std::size_t dim,
                                       std::size_t mlp_dim, std::size_t heads_, Rng& rng)
    : ln1(store, prefix + ".ln1", dim, rng),
      ln2(store, prefix + ".ln2", dim, rng),
      wqk(store.add(prefix + ".wqk", {dim, dim}, Init::kWeight, rng)),
      wv(store.add(prefix + ".wv", {dim, dim}, Init::kWeight, rng)),
      wo(store.add(prefix + ".wo", {dim, dim}, Init::kWeight, rng)),
      mlp(store, prefix + ".mlp", dim, mlp_dim, rng),
      heads(heads_) {
  check_heads(dim, heads, prefix);
}

namespace {

template <typename Kernel>
Tensor attention_block(const Tensor& y, const LshAttentionParams& p, Kernel&& kernel) {
  if (y.rank() != 3) throw DimensionError("attention block expects [F, S, D], got " + to_string(y.shape()));
  auto x = p.ln1(y);
  auto qk = split_heads(matmul(x, p.wqk), p.heads);
  auto v = split_heads(matmul(x, p.wv), p.heads);
  auto mid = add(matmul(merge_heads(kernel(qk, v), p.heads), p.wo), y);
  return add(p.mlp(p.ln2(mid)), mid);
}

}  // namespace

Tensor lsh_attention(const Tensor& y, const LshAttentionParams& params, const LshConfig& cfg, const KeyMask* mask) {
  return attention_block(y, params, [&](const Tensor& qk, const Tensor& v) { return lsh_attend(qk, v, cfg, mask); });
}

Tensor dense_attention_oracle(const Tensor& y, const LshAttentionParams& params, const KeyMask* mask) {
  return attention_block(y, params, [&](const Tensor& qk, const Tensor& v) { return dense_attend(qk, v, mask); });
}

}  // namespace sct
