// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "sct/attention_kernel.hpp"
#include "sct/ops.hpp"
#include "sct/random.hpp"
#include "sct/tensor.hpp"

namespace sct {

struct Parameter {
  std::string name;  // hierarchical, e.g. stage1.vilt.block0.msa.wq
  Tensor tensor;
  Shape shape_spec;
};

// kWeight and kEmbedding defer to the store's InitScheme. kGlorot is uniform
// in +-sqrt(6 / (fan_in + fan_out)) over a [in, out] matrix.
enum class Init { kWeight, kEmbedding, kTruncatedNormal, kGlorot, kZeros, kOnes };

// kTruncatedNormal: weights N(0, 0.02) truncated at 2 sigma, CLS and position
// embeddings zero. kGlorot: Glorot-uniform weights, embeddings N(0, 0.02).
enum class InitScheme { kTruncatedNormal, kGlorot };

// Ordered registry of every trainable tensor in a model.
class ParameterStore {
 public:
  static constexpr double kInitStddev = 0.02;

  explicit ParameterStore(InitScheme scheme = InitScheme::kTruncatedNormal) : scheme_(scheme) {}
  InitScheme scheme() const { return scheme_; }

  Tensor add(const std::string& name, Shape shape, Init init, Rng& rng);

  const std::vector<Parameter>& all() const { return params_; }
  std::vector<Parameter>& all() { return params_; }
  const Parameter* find(const std::string& name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  InitScheme scheme_ = InitScheme::kTruncatedNormal;
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// [B, S, h*dh] -> [B*h, S, dh] and back.
Tensor split_heads(const Tensor& x, std::size_t heads);
Tensor merge_heads(const Tensor& x, std::size_t heads);

struct LayerNormParams {
  Tensor gamma, beta;

  LayerNormParams() = default;
  LayerNormParams(ParameterStore& store, const std::string& prefix, std::size_t dim, Rng& rng);
  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
};

// x W + b.
struct Linear {
  Tensor weight, bias;

  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, std::size_t in, std::size_t out, bool with_bias, Rng& rng);
  Tensor operator()(const Tensor& x) const;
};

// Linear -> GELU -> Linear.
struct Mlp {
  Linear fc1, fc2;

  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& prefix, std::size_t dim, std::size_t hidden, Rng& rng);
  Tensor operator()(const Tensor& x) const { return fc2(gelu(fc1(x))); }
};

// Multi-head self-attention with bias-free projections, x [B, S, D].
struct MultiHeadAttention {
  Tensor wq, wk, wv, wo;
  std::size_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore& store, const std::string& prefix, std::size_t dim, std::size_t heads, Rng& rng);
  Tensor operator()(const Tensor& x, const KeyMask* mask = nullptr, std::vector<double>* probs = nullptr) const;
};

// Pre-LN block: z' = MSA(LN(z)) + z, z = MLP(LN(z')) + z'.
struct TransformerBlock {
  LayerNormParams ln1, ln2;
  MultiHeadAttention msa;
  Mlp mlp;

  TransformerBlock() = default;
  TransformerBlock(ParameterStore& store, const std::string& prefix, std::size_t dim, std::size_t mlp_dim,
                   std::size_t heads, Rng& rng);
  Tensor operator()(const Tensor& x, const KeyMask* mask = nullptr, std::vector<double>* probs = nullptr) const;
};

// Throws ConfigError naming `where` unless heads divides dim.
void check_heads(std::size_t dim, std::size_t heads, const std::string& where);

}  // namespace sct
