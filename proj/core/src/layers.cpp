// SPDX-License-Identifier: Apache-2.0
#include "sct/layers.hpp"

#include <cmath>

#include "sct/error.hpp"

namespace sct {

Tensor ParameterStore::add(const std::string& name, Shape shape, Init init, Rng& rng) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name " + name);
  const auto n = numel(shape);
  std::vector<double> values(n, 0.0);
  if (init == Init::kWeight) init = scheme_ == InitScheme::kGlorot ? Init::kGlorot : Init::kTruncatedNormal;
  if (init == Init::kEmbedding) init = scheme_ == InitScheme::kGlorot ? Init::kTruncatedNormal : Init::kZeros;
  if (init == Init::kOnes) {
    std::fill(values.begin(), values.end(), 1.0);
  } else if (init == Init::kTruncatedNormal) {
    for (auto& v : values) v = rng.truncated_normal(kInitStddev);
  } else if (init == Init::kGlorot) {
    if (shape.size() != 2) throw ContractError("glorot init needs a matrix, got " + to_string(shape));
    const double a = std::sqrt(6.0 / static_cast<double>(shape[0] + shape[1]));
    for (auto& v : values) v = rng.uniform(-a, a);
  }
  Tensor t(shape, std::move(values), true);
  index_.emplace(name, params_.size());
  params_.push_back({name, t, std::move(shape)});
  return t;
}

const Parameter* ParameterStore::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &params_[it->second];
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

void check_heads(std::size_t dim, std::size_t heads, const std::string& where) {
  if (heads == 0 || dim % heads != 0) {
    throw ConfigError(where + ": " + std::to_string(heads) + " heads do not divide width " + std::to_string(dim));
  }
}

Tensor split_heads(const Tensor& x, std::size_t heads) {
  const auto B = x.dim(0), S = x.dim(1), D = x.dim(2);
  if (heads == 1) return reshape(x, {B, S, D});
  auto r = reshape(x, {B, S, heads, D / heads});
  return reshape(permute(r, {0, 2, 1, 3}), {B * heads, S, D / heads});
}

Tensor merge_heads(const Tensor& x, std::size_t heads) {
  const auto BH = x.dim(0), S = x.dim(1), dh = x.dim(2);
  if (heads == 1) return x;
  auto r = reshape(x, {BH / heads, heads, S, dh});
  return reshape(permute(r, {0, 2, 1, 3}), {BH / heads, S, heads * dh});
}

LayerNormParams::LayerNormParams(ParameterStore& store, const std::string& prefix, std::size_t dim, Rng& rng)
    : gamma(store.add(prefix + ".gamma", {dim}, Init::kOnes, rng)),
      beta(store.add(prefix + ".beta", {dim}, Init::kZeros, rng)) {}

Linear::Linear(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out, bool with_bias,
               Rng& rng)
    : weight(store.add(prefix + ".weight", {in, out}, Init::kWeight, rng)) {
  if (with_bias) bias = store.add(prefix + ".bias", {out}, Init::kZeros, rng);
}

Tensor Linear::operator()(const Tensor& x) const {
  auto y = matmul(x, weight);
  return bias.defined() ? add(y, bias) : y;
}

Mlp::Mlp(ParameterStore& store, const std::string& prefix, std::size_t dim, std::size_t hidden, Rng& rng)
    : fc1(store, prefix + ".fc1", dim, hidden, true, rng), fc2(store, prefix + ".fc2", hidden, dim, true, rng) {}

MultiHeadAttention::MultiHeadAttention(ParameterStore& store, const std::string& prefix, std::size_t dim,
                                       std::size_t heads_, Rng& rng)
    : wq(store.add(prefix + ".wq", {dim, dim}, Init::kWeight, rng)),
      wk(store.add(prefix + ".wk", {dim, dim}, Init::kWeight, rng)),
      wv(store.add(prefix + ".wv", {dim, dim}, Init::kWeight, rng)),
      wo(store.add(prefix + ".wo", {dim, dim}, Init::kWeight, rng)),
      heads(heads_) {
  check_heads(dim, heads, prefix);
}

Tensor MultiHeadAttention::operator()(const Tensor& x, const KeyMask* mask, std::vector<double>* probs) const {
  const auto dh = x.dim(2) / heads;
  AttentionOptions opt;
  opt.scale = 1.0 / std::sqrt(static_cast<double>(dh));
  opt.key_mask = mask;
  opt.probs_out = probs;
  auto q = split_heads(matmul(x, wq), heads);
  auto k = split_heads(matmul(x, wk), heads);
  auto v = split_heads(matmul(x, wv), heads);
  return matmul(merge_heads(scaled_dot_attention(q, k, v, opt), heads), wo);
}

TransformerBlock::TransformerBlock(ParameterStore& store, const std::string& prefix, std::size_t dim,
                                   std::size_t mlp_dim, std::size_t heads, Rng& rng)
    : ln1(store, prefix + ".ln1", dim, rng),
      ln2(store, prefix + ".ln2", dim, rng),
      msa(store, prefix + ".msa", dim, heads, rng),
      mlp(store, prefix + ".mlp", dim, mlp_dim, rng) {}

Tensor TransformerBlock::operator()(const Tensor& x, const KeyMask* mask, std::vector<double>* probs) const {
  auto mid = add(msa(ln1(x), mask, probs), x);
  return add(mlp(ln2(mid)), mid);
}

}  // namespace sct
