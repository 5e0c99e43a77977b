// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "sct/bench_attn.hpp"
#include "sct/error.hpp"

namespace sct {
namespace {

TEST(BenchStats, Percentile) {
  EXPECT_DOUBLE_EQ(percentile({3.0, 1.0, 2.0}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(percentile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.1), 1.4);
  EXPECT_DOUBLE_EQ(percentile({7.0}, 0.9), 7.0);
  EXPECT_THROW(percentile({}, 0.5), ContractError);
}

TEST(BenchStats, LogLogSlopeOfPowerLaws) {
  std::vector<double> x{1024, 2048, 4096, 8192}, quad, lin;
  for (double v : x) {
    quad.push_back(3e-9 * v * v);
    lin.push_back(2e-6 * v * std::log(v));
  }
  EXPECT_NEAR(loglog_slope(x, quad), 2.0, 1e-12);
  const double s = loglog_slope(x, lin);
  EXPECT_GT(s, 1.0);
  EXPECT_LT(s, 1.2);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), ContractError);
}

TEST(Bench, SmallRunProducesRowsAndSlopes) {
  BenchConfig cfg;
  cfg.lengths = {64, 128};
  cfg.repeats = 2;
  cfg.head_dim = 8;
  cfg.lsh.chunk_size = 16;
  auto rows = bench_attn(cfg);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].kernel, "dense");
  EXPECT_EQ(rows[1].kernel, "lsh");
  EXPECT_EQ(rows[4].kernel, "dense_slope");
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_GT(rows[i].median_s, 0.0);
    EXPECT_LE(rows[i].p10_s, rows[i].median_s);
    EXPECT_LE(rows[i].median_s, rows[i].p90_s);
  }
  const auto csv = bench_csv(rows);
  EXPECT_EQ(csv.rfind(std::string(kBenchHeader) + "\n", 0), 0u);
  EXPECT_NE(csv.find("\nlsh,128,"), std::string::npos);
  cfg.lengths = {128, 64};
  EXPECT_THROW(bench_attn(cfg), ConfigError);
}

}  // namespace
}  // namespace sct
