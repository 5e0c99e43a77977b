// SPDX-License-Identifier: Apache-2.0
#include "sct/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Core>

#include "sct/error.hpp"

namespace sct {

using detail::input_grad;
using detail::make_result;
using detail::Node;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

std::size_t normalize_axis(std::ptrdiff_t axis, std::size_t rank) {
  const auto r = static_cast<std::ptrdiff_t>(rank);
  const auto a = axis < 0 ? axis + r : axis;
  if (a < 0 || a >= r) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
  }
  return static_cast<std::size_t>(a);
}

std::size_t product(const Shape& s, std::size_t begin, std::size_t end) {
  std::size_t n = 1;
  for (auto i = begin; i < end; ++i) n *= s[i];
  return n;
}

// Flat source offsets of each output element for both operands.
struct BroadcastPlan {
  Shape out;
  bool same = false;
  std::vector<std::size_t> ia, ib;
};

BroadcastPlan plan_broadcast(const Shape& a, const Shape& b, const char* op) {
  BroadcastPlan plan;
  if (a == b) {
    plan.out = a;
    plan.same = true;
    return plan;
  }
  const auto rank = std::max(a.size(), b.size());
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(rank - b.size()));
  plan.out.resize(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw DimensionError(std::string(op) + ": cannot broadcast " + to_string(a) + " with " + to_string(b));
    }
    plan.out[i] = std::max(pa[i], pb[i]);
  }
  std::vector<std::size_t> sa(rank), sb(rank);
  std::size_t accum_a = 1, accum_b = 1;
  for (std::size_t i = rank; i-- > 0;) {
    sa[i] = pa[i] == 1 ? 0 : accum_a;
    sb[i] = pb[i] == 1 ? 0 : accum_b;
    accum_a *= pa[i];
    accum_b *= pb[i];
  }
  const auto n = numel(plan.out);
  plan.ia.resize(n);
  plan.ib.resize(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t oa = 0, ob = 0;
  for (std::size_t f = 0; f < n; ++f) {
    plan.ia[f] = oa;
    plan.ib[f] = ob;
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < plan.out[d]) {
        oa += sa[d];
        ob += sb[d];
        break;
      }
      oa -= sa[d] * (plan.out[d] - 1);
      ob -= sb[d] * (plan.out[d] - 1);
      idx[d] = 0;
    }
  }
  return plan;
}

enum class BinaryKind { kAdd, kSub, kMul };

Tensor binary(const Tensor& a, const Tensor& b, BinaryKind kind, const char* name) {
  auto plan = std::make_shared<BroadcastPlan>(plan_broadcast(a.shape(), b.shape(), name));
  const auto n = numel(plan->out);
  const auto da = a.data();
  const auto db = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = da[plan->same ? i : plan->ia[i]];
    const double y = db[plan->same ? i : plan->ib[i]];
    out[i] = kind == BinaryKind::kAdd ? x + y : kind == BinaryKind::kSub ? x - y : x * y;
  }
  return make_result(name, plan->out, std::move(out), {a, b}, [plan, kind, n](Node& self) {
    const auto& dy = self.grad;
    const auto& xa = self.inputs[0]->data;
    const auto& xb = self.inputs[1]->data;
    if (double* ga = input_grad(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto j = plan->same ? i : plan->ia[i];
        const auto k = plan->same ? i : plan->ib[i];
        ga[j] += kind == BinaryKind::kMul ? dy[i] * xb[k] : dy[i];
      }
    }
    if (double* gb = input_grad(self, 1)) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto j = plan->same ? i : plan->ia[i];
        const auto k = plan->same ? i : plan->ib[i];
        gb[k] += kind == BinaryKind::kMul ? dy[i] * xa[j] : kind == BinaryKind::kSub ? -dy[i] : dy[i];
      }
    }
  });
}

}  // namespace

std::uint64_t& flop_counter() {
  thread_local std::uint64_t count = 0;
  return count;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) {
    throw DimensionError("matmul needs rank >= 2 operands, got " + to_string(sa) + " and " + to_string(sb));
  }
  const auto m = sa[sa.size() - 2];
  const auto k = sa.back();
  const auto kb = sb[sb.size() - 2];
  const auto n = sb.back();
  const bool shared_b = sb.size() == 2;
  if (k != kb || (!shared_b && (sb.size() != sa.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin())))) {
    throw DimensionError("matmul shape mismatch: " + to_string(sa) + " x " + to_string(sb));
  }
  const auto batch = product(sa, 0, sa.size() - 2);
  flop_counter() += 2 * batch * m * k * n;
  Shape out_shape(sa.begin(), sa.end() - 1);
  out_shape.push_back(n);
  std::vector<double> out(batch * m * n);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  if (shared_b) {
    MutMap(out.data(), static_cast<Eigen::Index>(batch * m), static_cast<Eigen::Index>(n)).noalias() =
        ConstMap(pa, static_cast<Eigen::Index>(batch * m), static_cast<Eigen::Index>(k)) *
        ConstMap(pb, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  } else {
    for (std::size_t i = 0; i < batch; ++i) {
      MutMap(out.data() + i * m * n, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)).noalias() =
          ConstMap(pa + i * m * k, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) *
          ConstMap(pb + i * k * n, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    }
  }
  return make_result("matmul", std::move(out_shape), std::move(out), {a, b},
                     [batch, m, k, n, shared_b](Node& self) {
                       const double* dy = self.grad.data();
                       const double* xa = self.inputs[0]->data.data();
                       const double* xb = self.inputs[1]->data.data();
                       const auto M = static_cast<Eigen::Index>(m), K = static_cast<Eigen::Index>(k),
                                  N = static_cast<Eigen::Index>(n);
                       double* ga = input_grad(self, 0);
                       double* gb = input_grad(self, 1);
                       if (shared_b) {
                         const auto BM = static_cast<Eigen::Index>(batch * m);
                         if (ga) MutMap(ga, BM, K).noalias() += ConstMap(dy, BM, N) * ConstMap(xb, K, N).transpose();
                         if (gb) MutMap(gb, K, N).noalias() += ConstMap(xa, BM, K).transpose() * ConstMap(dy, BM, N);
                         return;
                       }
                       for (std::size_t i = 0; i < batch; ++i) {
                         ConstMap g(dy + i * m * n, M, N);
                         if (ga) MutMap(ga + i * m * k, M, K).noalias() += g * ConstMap(xb + i * k * n, K, N).transpose();
                         if (gb) MutMap(gb + i * k * n, K, N).noalias() += ConstMap(xa + i * m * k, M, K).transpose() * g;
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kSub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, BinaryKind::kMul, "mul"); }

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= factor;
  return make_result("scale", x.shape(), std::move(out), {x}, [factor](Node& self) {
    double* g = input_grad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += factor * self.grad[i];
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("cannot reshape " + to_string(x.shape()) + " to " + to_string(shape));
  }
  return make_result("reshape", std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), {x},
                     [](Node& self) {
                       double* g = input_grad(self, 0);
                       for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
                     });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& axes) {
  const auto& in = x.shape();
  const auto rank = in.size();
  if (axes.size() != rank) throw DimensionError("permute axes do not match rank of " + to_string(in));
  std::vector<bool> used(rank, false);
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    if (axes[i] >= rank || used[axes[i]]) throw DimensionError("permute axes are not a permutation");
    used[axes[i]] = true;
    out_shape[i] = in[axes[i]];
  }
  std::vector<std::size_t> in_stride(rank);
  std::size_t acc = 1;
  for (std::size_t i = rank; i-- > 0;) {
    in_stride[i] = acc;
    acc *= in[i];
  }
  const auto n = x.numel();
  auto src = std::make_shared<std::vector<std::size_t>>(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t off = 0;
  for (std::size_t f = 0; f < n; ++f) {
    (*src)[f] = off;
    for (std::size_t d = rank; d-- > 0;) {
      const auto s = in_stride[axes[d]];
      if (++idx[d] < out_shape[d]) {
        off += s;
        break;
      }
      off -= s * (out_shape[d] - 1);
      idx[d] = 0;
    }
  }
  std::vector<double> out(n);
  const auto xd = x.data();
  for (std::size_t f = 0; f < n; ++f) out[f] = xd[(*src)[f]];
  return make_result("permute", std::move(out_shape), std::move(out), {x}, [src](Node& self) {
    double* g = input_grad(self, 0);
    for (std::size_t f = 0; f < self.grad.size(); ++f) g[(*src)[f]] += self.grad[f];
  });
}

Tensor transpose(const Tensor& x) {
  const auto rank = x.rank();
  if (rank < 2) throw DimensionError("transpose needs rank >= 2, got " + to_string(x.shape()));
  std::vector<std::size_t> axes(rank);
  for (std::size_t i = 0; i < rank; ++i) axes[i] = i;
  std::swap(axes[rank - 1], axes[rank - 2]);
  return permute(x, axes);
}

Tensor concat(const std::vector<Tensor>& parts, std::ptrdiff_t axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const auto& first = parts.front().shape();
  const auto ax = normalize_axis(axis, first.size());
  Shape out_shape = first;
  out_shape[ax] = 0;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == ax || s[i] == first[i];
    if (!ok) throw DimensionError("concat shape mismatch: " + to_string(first) + " vs " + to_string(s));
    out_shape[ax] += s[ax];
  }
  const auto outer = product(first, 0, ax);
  const auto inner = product(first, ax + 1, first.size());
  auto widths = std::make_shared<std::vector<std::size_t>>();
  for (const auto& p : parts) widths->push_back(p.shape()[ax] * inner);
  const auto row = out_shape[ax] * inner;
  std::vector<double> out(outer * row);
  std::size_t col = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto d = parts[p].data();
    const auto w = (*widths)[p];
    for (std::size_t o = 0; o < outer; ++o) std::copy_n(d.data() + o * w, w, out.data() + o * row + col);
    col += w;
  }
  return make_result("concat", std::move(out_shape), std::move(out), parts, [widths, outer, row](Node& self) {
    std::size_t col = 0;
    for (std::size_t p = 0; p < widths->size(); ++p) {
      const auto w = (*widths)[p];
      if (double* g = input_grad(self, p)) {
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < w; ++i) g[o * w + i] += self.grad[o * row + col + i];
      }
      col += w;
    }
  });
}

Tensor slice(const Tensor& x, std::ptrdiff_t axis, std::size_t begin, std::size_t end) {
  const auto& s = x.shape();
  const auto ax = normalize_axis(axis, s.size());
  if (begin > end || end > s[ax]) {
    throw DimensionError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range for " +
                         to_string(s));
  }
  const auto outer = product(s, 0, ax);
  const auto inner = product(s, ax + 1, s.size());
  const auto in_row = s[ax] * inner;
  const auto w = (end - begin) * inner;
  const auto off = begin * inner;
  Shape out_shape = s;
  out_shape[ax] = end - begin;
  std::vector<double> out(outer * w);
  const auto d = x.data();
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(d.data() + o * in_row + off, w, out.data() + o * w);
  return make_result("slice", std::move(out_shape), std::move(out), {x}, [outer, in_row, w, off](Node& self) {
    double* g = input_grad(self, 0);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < w; ++i) g[o * in_row + off + i] += self.grad[o * w + i];
  });
}

Tensor gather_rows(const Tensor& x, const std::vector<std::int64_t>& indices) {
  const auto& s = x.shape();
  if (s.empty()) throw DimensionError("gather_rows on a scalar");
  const auto rows = s[0];
  const auto width = product(s, 1, s.size());
  auto idx = std::make_shared<std::vector<std::int64_t>>(indices);
  std::vector<double> out(idx->size() * width, 0.0);
  const auto d = x.data();
  for (std::size_t r = 0; r < idx->size(); ++r) {
    const auto i = (*idx)[r];
    if (i < 0) continue;
    if (static_cast<std::size_t>(i) >= rows) {
      throw IndexError("gather_rows index " + std::to_string(i) + " out of range for " + to_string(s));
    }
    std::copy_n(d.data() + static_cast<std::size_t>(i) * width, width, out.data() + r * width);
  }
  Shape out_shape = s;
  out_shape[0] = idx->size();
  return make_result("gather_rows", std::move(out_shape), std::move(out), {x}, [idx, width](Node& self) {
    double* g = input_grad(self, 0);
    for (std::size_t r = 0; r < idx->size(); ++r) {
      const auto i = (*idx)[r];
      if (i < 0) continue;
      double* dst = g + static_cast<std::size_t>(i) * width;
      const double* src = self.grad.data() + r * width;
      for (std::size_t c = 0; c < width; ++c) dst[c] += src[c];
    }
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return make_result("sum", {}, {total}, {x}, [](Node& self) {
    double* g = input_grad(self, 0);
    const double dy = self.grad[0];
    for (std::size_t i = 0; i < self.inputs[0]->data.size(); ++i) g[i] += dy;
  });
}

Tensor mean(const Tensor& x) {
  const auto n = x.numel();
  if (n == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(n));
}

Tensor softmax(const Tensor& x, std::ptrdiff_t axis) {
  const auto& s = x.shape();
  const auto ax = normalize_axis(axis, s.size());
  const auto outer = product(s, 0, ax);
  const auto n = s[ax];
  const auto inner = product(s, ax + 1, s.size());
  const auto d = x.data();
  std::vector<double> out(d.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const auto base = o * n * inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, d[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) z += (out[base + j * inner] = std::exp(d[base + j * inner] - mx));
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= z;
    }
  }
  return make_result("softmax", s, std::move(out), {x}, [outer, n, inner](Node& self) {
    double* g = input_grad(self, 0);
    const auto& y = self.data;
    const auto& dy = self.grad;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t i = 0; i < inner; ++i) {
        const auto base = o * n * inner + i;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += y[base + j * inner] * dy[base + j * inner];
        for (std::size_t j = 0; j < n; ++j) {
          const auto k = base + j * inner;
          g[k] += y[k] * (dy[k] - dot);
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const auto& s = x.shape();
  if (s.empty()) throw DimensionError("layer_norm on a scalar");
  const auto d = s.back();
  if (gamma.numel() != d || beta.numel() != d) {
    throw DimensionError("layer_norm gamma/beta " + to_string(gamma.shape()) + "/" + to_string(beta.shape()) +
                         " do not match last axis of " + to_string(s));
  }
  const auto rows = x.numel() / d;
  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto rstd = std::make_shared<std::vector<double>>(rows);
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xd.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const double h = (row[j] - mu) * inv;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gd[j] + bd[j];
    }
  }
  return make_result("layer_norm", s, std::move(out), {x, gamma, beta}, [xhat, rstd, rows, d](Node& self) {
    const auto& dy = self.grad;
    const auto& gd = self.inputs[1]->data;
    double* gx = input_grad(self, 0);
    double* gg = input_grad(self, 1);
    double* gb = input_grad(self, 2);
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* h = xhat->data() + r * d;
      const double* g = dy.data() + r * d;
      double mean_dh = 0.0, mean_dh_h = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double dh = g[j] * gd[j];
        mean_dh += dh;
        mean_dh_h += dh * h[j];
        if (gg) gg[j] += g[j] * h[j];
        if (gb) gb[j] += g[j];
      }
      mean_dh *= inv_d;
      mean_dh_h *= inv_d;
      if (gx) {
        const double inv = (*rstd)[r];
        for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += inv * (g[j] * gd[j] - mean_dh - h[j] * mean_dh_h);
      }
    }
  });
}

Tensor gelu(const Tensor& x) {
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = 0.5 * xd[i] * (1.0 + std::erf(xd[i] * std::numbers::sqrt2 / 2.0));
  return make_result("gelu", x.shape(), std::move(out), {x}, [](Node& self) {
    double* g = input_grad(self, 0);
    const auto& xs = self.inputs[0]->data;
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double v = xs[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      g[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

Tensor dropout(const Tensor& x, double p, bool train, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(p));
  if (!train || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  for (auto& m : *mask) m = rng.bernoulli(p) ? 0.0 : keep_scale;
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = xd[i] * (*mask)[i];
  return make_result("dropout", x.shape(), std::move(out), {x}, [mask](Node& self) {
    double* g = input_grad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * (*mask)[i];
  });
}

Tensor l2_normalize(const Tensor& x, double eps) {
  const auto& s = x.shape();
  if (s.empty()) throw DimensionError("l2_normalize on a scalar");
  const auto d = s.back();
  const auto rows = x.numel() / d;
  auto norms = std::make_shared<std::vector<double>>(rows);
  const auto xd = x.data();
  std::vector<double> out(xd.size());
  for (std::size_t r = 0; r < rows; ++r) {
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) ss += xd[r * d + j] * xd[r * d + j];
    const double nrm = std::sqrt(ss + eps);
    (*norms)[r] = nrm;
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xd[r * d + j] / nrm;
  }
  return make_result("l2_normalize", s, std::move(out), {x}, [norms, rows, d](Node& self) {
    double* g = input_grad(self, 0);
    const auto& y = self.data;
    const auto& dy = self.grad;
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += y[r * d + j] * dy[r * d + j];
      const double inv = 1.0 / (*norms)[r];
      for (std::size_t j = 0; j < d; ++j) g[r * d + j] += inv * (dy[r * d + j] - y[r * d + j] * dot);
    }
  });
}

Tensor label_smoothed_cross_entropy(const Tensor& logits, std::size_t target, double alpha) {
  const auto& s = logits.shape();
  if (s.empty() || s.size() > 2 || (s.size() == 2 && s[0] != 1)) {
    throw DimensionError("cross entropy expects logits [C] or [1, C], got " + to_string(s));
  }
  if (alpha < 0.0 || alpha >= 1.0) throw ConfigError("label smoothing must be in [0, 1), got " + std::to_string(alpha));
  const auto c = s.back();
  if (target >= c) {
    throw IndexError("target class " + std::to_string(target) + " out of range for " + std::to_string(c) + " classes");
  }
  const auto z = logits.data();
  const double mx = *std::max_element(z.begin(), z.end());
  double sum_exp = 0.0;
  for (double v : z) sum_exp += std::exp(v - mx);
  const double log_z = mx + std::log(sum_exp);
  auto q = std::make_shared<std::vector<double>>(c, alpha / static_cast<double>(c));
  (*q)[target] += 1.0 - alpha;
  double loss = 0.0;
  for (std::size_t i = 0; i < c; ++i) loss -= (*q)[i] * (z[i] - log_z);
  return make_result("cross_entropy", {}, {loss}, {logits}, [q, log_z](Node& self) {
    double* g = input_grad(self, 0);
    const auto& zs = self.inputs[0]->data;
    const double dy = self.grad[0];
    for (std::size_t i = 0; i < zs.size(); ++i) g[i] += dy * (std::exp(zs[i] - log_z) - (*q)[i]);
  });
}

}  // namespace sct
