// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sct/lsh.hpp"

namespace sct {

struct BenchConfig {
  std::vector<std::size_t> lengths{1024, 2048, 4096, 8192};
  std::size_t repeats = 5;
  std::size_t head_dim = 32;
  LshConfig lsh;  // chunk_size 64 by default
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::string kernel;  // "dense", "lsh", or "<kernel>_slope" with the slope in median_s
  std::size_t seq_len = 0;
  double median_s = 0.0, p10_s = 0.0, p90_s = 0.0;
};

// Times dense_attend and lsh_attend on one head of Gaussian tokens for each
// length (no gradient recording, calling thread only), then appends the
// least-squares log-log slope of median time against length per kernel.
std::vector<BenchRow> bench_attn(const BenchConfig& cfg, std::ostream* log = nullptr);

// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Linear-interpolated percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

inline constexpr const char* kBenchHeader = "kernel,seq_len,median_s,p10_s,p90_s";
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace sct
