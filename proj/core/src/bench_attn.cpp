// SPDX-License-Identifier: Apache-2.0
#include "sct/bench_attn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "sct/error.hpp"
#include "sct/random.hpp"

namespace sct {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("slope needs at least two matching points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<BenchRow> bench_attn(const BenchConfig& cfg, std::ostream* log) {
  if (cfg.lengths.empty() || cfg.repeats == 0) throw ConfigError("bench needs lengths and at least one repeat");
  if (!std::is_sorted(cfg.lengths.begin(), cfg.lengths.end())) throw ConfigError("bench lengths must be ascending");
  cfg.lsh.validate();
  NoGradGuard no_grad;
  std::vector<BenchRow> rows;
  std::vector<double> xs, dense_med, lsh_med;
  for (const auto S : cfg.lengths) {
    auto rng = Rng::derive(cfg.seed, S);
    std::vector<double> qk(S * cfg.head_dim), v(S * cfg.head_dim);
    for (auto& x : qk) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    const Tensor tqk({1, S, cfg.head_dim}, qk), tv({1, S, cfg.head_dim}, v);
    auto time_kernel = [&](const std::string& name, auto&& fn) {
      std::vector<double> samples;
      for (std::size_t r = 0; r < cfg.repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        auto out = fn();
        samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        if (!std::isfinite(out[0])) throw Error(name + " produced a non-finite output");
      }
      BenchRow row{name, S, percentile(samples, 0.5), percentile(samples, 0.1), percentile(samples, 0.9)};
      if (log) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-6s S=%-6zu median %.4fs\n", name.c_str(), S, row.median_s);
        *log << buf << std::flush;
      }
      rows.push_back(row);
      return row.median_s;
    };
    xs.push_back(static_cast<double>(S));
    dense_med.push_back(time_kernel("dense", [&] { return dense_attend(tqk, tv); }));
    lsh_med.push_back(time_kernel("lsh", [&] { return lsh_attend(tqk, tv, cfg.lsh); }));
  }
  if (xs.size() >= 2) {
    const double ds = loglog_slope(xs, dense_med), ls = loglog_slope(xs, lsh_med);
    rows.push_back({"dense_slope", 0, ds, ds, ds});
    rows.push_back({"lsh_slope", 0, ls, ls, ls});
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = std::string(kBenchHeader) + "\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%zu,%.6g,%.6g,%.6g\n", r.kernel.c_str(), r.seq_len, r.median_s, r.p10_s,
                  r.p90_s);
    out += buf;
  }
  return out;
}

}  // namespace sct
