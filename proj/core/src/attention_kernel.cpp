// SPDX-License-Identifier: Apache-2.0
#include "sct/attention_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Core>

#include "sct/error.hpp"
#include "sct/ops.hpp"

namespace sct {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using StridedConst = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using StridedMut = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

constexpr std::size_t kRowBlock = 256;

struct Dims {
  std::size_t batch, sq, sk, d, dv, out_cols, mask_div;
};

// Turns raw scores into probabilities in place, honoring mask and self ids.
// Writes log-sum-exp per row.
void normalize_rows(double* scores, std::size_t row_begin, std::size_t rows, std::size_t b, const Dims& dims,
                    const AttentionOptions& opt, double* lse) {
  const auto sk = dims.sk;
  for (std::size_t r = 0; r < rows; ++r) {
    double* s = scores + r * sk;
    const auto qi = row_begin + r;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < sk; ++j) {
      if (opt.key_mask && !opt.key_mask->allows(b / dims.mask_div, j)) {
        s[j] = -std::numeric_limits<double>::infinity();
        continue;
      }
      if (opt.query_ids && (*opt.query_ids)[b * dims.sq + qi] >= 0 &&
          (*opt.query_ids)[b * dims.sq + qi] == (*opt.key_ids)[b * sk + j]) {
        s[j] = kSelfScore;
      }
      mx = std::max(mx, s[j]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      std::fill_n(s, sk, 0.0);
      lse[r] = kEmptyRowLse;
      continue;
    }
    double z = 0.0;
    for (std::size_t j = 0; j < sk; ++j) {
      const double e = s[j] == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(s[j] - mx);
      s[j] = e;
      z += e;
    }
    const double inv = 1.0 / z;
    for (std::size_t j = 0; j < sk; ++j) s[j] *= inv;
    lse[r] = mx + std::log(z);
  }
}

}  // namespace

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, const AttentionOptions& opt) {
  const auto& qs = q.shape();
  const auto& ks = k.shape();
  const auto& vs = v.shape();
  if (qs.size() != 3 || ks.size() != 3 || vs.size() != 3 || qs[0] != ks[0] || ks[0] != vs[0] || qs[2] != ks[2] ||
      ks[1] != vs[1]) {
    throw DimensionError("attention shapes q " + to_string(qs) + ", k " + to_string(ks) + ", v " + to_string(vs));
  }
  Dims dims{qs[0], qs[1], ks[1], qs[2], vs[2], vs[2] + (opt.with_lse ? 1 : 0), 1};
  if (opt.key_mask) {
    const auto rows = opt.key_mask->rows;
    if (rows == 0 || dims.batch % rows != 0 || opt.key_mask->keys != dims.sk ||
        opt.key_mask->valid.size() != rows * dims.sk) {
      throw DimensionError("key mask [" + std::to_string(rows) + ", " + std::to_string(opt.key_mask->keys) +
                           "] incompatible with attention batch " + std::to_string(dims.batch) + " x keys " +
                           std::to_string(dims.sk));
    }
    dims.mask_div = dims.batch / rows;
  }
  if ((opt.query_ids == nullptr) != (opt.key_ids == nullptr)) {
    throw ContractError("query_ids and key_ids must be given together");
  }
  if (opt.query_ids && (opt.query_ids->size() != dims.batch * dims.sq || opt.key_ids->size() != dims.batch * dims.sk)) {
    throw DimensionError("self-id arrays do not match attention extents");
  }

  const bool record = GradMode::enabled() && (q.requires_grad() || k.requires_grad() || v.requires_grad());
  const bool keep_probs = record || opt.probs_out != nullptr;
  const auto B = dims.batch, Sq = dims.sq, Sk = dims.sk, D = dims.d, Dv = dims.dv;
  flop_counter() += 2 * B * Sq * Sk * (D + Dv);

  std::shared_ptr<std::vector<double>> probs;
  if (keep_probs) probs = std::make_shared<std::vector<double>>(B * Sq * Sk);
  std::vector<double> scratch(keep_probs ? 0 : std::min(kRowBlock, Sq) * Sk);
  std::vector<double> lse(Sq);
  std::vector<double> out(B * Sq * dims.out_cols);
  const double* pq = q.data().data();
  const double* pk = k.data().data();
  const double* pv = v.data().data();

  for (std::size_t b = 0; b < B; ++b) {
    ConstMap Kb(pk + b * Sk * D, static_cast<Eigen::Index>(Sk), static_cast<Eigen::Index>(D));
    ConstMap Vb(pv + b * Sk * Dv, static_cast<Eigen::Index>(Sk), static_cast<Eigen::Index>(Dv));
    const std::size_t block = keep_probs ? Sq : kRowBlock;
    for (std::size_t r0 = 0; r0 < Sq; r0 += block) {
      const auto rows = std::min(block, Sq - r0);
      double* s = keep_probs ? probs->data() + b * Sq * Sk + r0 * Sk : scratch.data();
      MutMap S(s, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(Sk));
      S.noalias() = opt.scale * (ConstMap(pq + (b * Sq + r0) * D, static_cast<Eigen::Index>(rows),
                                          static_cast<Eigen::Index>(D)) *
                                 Kb.transpose());
      normalize_rows(s, r0, rows, b, dims, opt, lse.data() + r0);
      StridedMut O(out.data() + (b * Sq + r0) * dims.out_cols, static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(Dv), Eigen::OuterStride<>(static_cast<Eigen::Index>(dims.out_cols)));
      O.noalias() = S * Vb;
    }
    if (opt.with_lse) {
      for (std::size_t i = 0; i < Sq; ++i) out[(b * Sq + i) * dims.out_cols + Dv] = lse[i];
    }
  }
  if (opt.probs_out) *opt.probs_out = *probs;

  std::shared_ptr<std::vector<std::int64_t>> qid, kid;
  if (opt.query_ids) {
    qid = std::make_shared<std::vector<std::int64_t>>(*opt.query_ids);
    kid = std::make_shared<std::vector<std::int64_t>>(*opt.key_ids);
  }
  const double scale = opt.scale;
  Shape out_shape{B, Sq, dims.out_cols};
  return detail::make_result(
      "attention", std::move(out_shape), std::move(out), {q, k, v},
      [probs, qid, kid, dims, scale, with_lse = opt.with_lse](detail::Node& self) {
        const auto B = dims.batch, Sq = dims.sq, Sk = dims.sk, D = dims.d, Dv = dims.dv;
        const auto eSq = static_cast<Eigen::Index>(Sq), eSk = static_cast<Eigen::Index>(Sk),
                   eD = static_cast<Eigen::Index>(D), eDv = static_cast<Eigen::Index>(Dv);
        double* gq = detail::input_grad(self, 0);
        double* gk = detail::input_grad(self, 1);
        double* gv = detail::input_grad(self, 2);
        const double* xq = self.inputs[0]->data.data();
        const double* xk = self.inputs[1]->data.data();
        const double* xv = self.inputs[2]->data.data();
        RowMat dS(eSq, eSk);
        for (std::size_t b = 0; b < B; ++b) {
          ConstMap P(probs->data() + b * Sq * Sk, eSq, eSk);
          StridedConst dO(self.grad.data() + b * Sq * dims.out_cols, eSq, eDv,
                          Eigen::OuterStride<>(static_cast<Eigen::Index>(dims.out_cols)));
          ConstMap Vb(xv + b * Sk * Dv, eSk, eDv);
          if (gv) MutMap(gv + b * Sk * Dv, eSk, eDv).noalias() += P.transpose() * dO;
          if (!gq && !gk) continue;
          dS.noalias() = dO * Vb.transpose();
          for (std::size_t i = 0; i < Sq; ++i) {
            const double dlse = with_lse ? self.grad[(b * Sq + i) * dims.out_cols + Dv] : 0.0;
            double dot = 0.0;
            for (std::size_t j = 0; j < Sk; ++j) dot += P(i, j) * dS(i, j);
            for (std::size_t j = 0; j < Sk; ++j) dS(i, j) = P(i, j) * (dS(i, j) - dot + dlse);
            if (qid) {
              const auto id = (*qid)[b * Sq + i];
              if (id >= 0) {
                for (std::size_t j = 0; j < Sk; ++j)
                  if ((*kid)[b * Sk + j] == id) dS(i, j) = 0.0;
              }
            }
          }
          if (gq) MutMap(gq + b * Sq * D, eSq, eD).noalias() += scale * (dS * ConstMap(xk + b * Sk * D, eSk, eD));
          if (gk)
            MutMap(gk + b * Sk * D, eSk, eD).noalias() += scale * (dS.transpose() * ConstMap(xq + b * Sq * D, eSq, eD));
        }
      });
}

}  // namespace sct
