// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "sct/random.hpp"
#include "sct/tensor.hpp"

namespace sct {

// Running count of forward FLOPs (2 per multiply-add) spent in matmul,
// the attention kernel and LSH hashing on the calling thread.
std::uint64_t& flop_counter();

// a: [..., m, k]. b: [k, n] (shared across batch) or [..., k, n] with the
// same leading dims as a. Result: [..., m, n].
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& x, double f) { return scale(x, f); }

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes);
// Swaps the last two axes.
Tensor transpose(const Tensor& x);
Tensor concat(const std::vector<Tensor>& parts, std::ptrdiff_t axis);
Tensor slice(const Tensor& x, std::ptrdiff_t axis, std::size_t begin, std::size_t end);

// Treats x as [N, row...] and picks rows by index; index -1 yields a zero row.
// Repeated indices are allowed (gradients add up).
Tensor gather_rows(const Tensor& x, const std::vector<std::int64_t>& indices);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Max-subtracted softmax along one axis.
Tensor softmax(const Tensor& x, std::ptrdiff_t axis);

// Normalizes over the last axis, then applies gamma/beta of that extent.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-6);

// Exact erf form.
Tensor gelu(const Tensor& x);

// Inverted dropout: kept units are scaled by 1/(1-p) in training; identity in eval.
Tensor dropout(const Tensor& x, double p, bool train, Rng& rng);

// Divides each vector along the last axis by sqrt(|x|^2 + eps).
Tensor l2_normalize(const Tensor& x, double eps = 1e-12);

// -sum_c q_c log softmax(logits)_c with q = (1-alpha) onehot + alpha/C.
// logits: [C] or [1, C].
Tensor label_smoothed_cross_entropy(const Tensor& logits, std::size_t target, double alpha);

}  // namespace sct
