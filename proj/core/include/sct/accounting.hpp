// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sct/config.hpp"
#include "sct/layers.hpp"

namespace sct {

// Totals with a per-module breakdown in model order.
struct CostReport {
  std::uint64_t total = 0;
  std::vector<std::pair<std::string, std::uint64_t>> modules;

  std::uint64_t module(const std::string& name) const;
};

// Scalar parameter count, grouped like estimate_flops: "stage<k>.<module>"
// inside stages, "clip" for the clip encoder.
CostReport count_params(const ParameterStore& store);

// Forward FLOPs of one clip, counting 2 per multiply-add over every matrix
// product: projections, attention scores and weighted sums, MLPs, pooling,
// the clip encoder, and LSH hashing. Elementwise work is ignored. Modules:
// stage<k>.vilt, stage<k>.lsh, stage<k>.pool, stage<k>.shift, clip.
CostReport estimate_flops(const SctConfig& cfg);

// Builds the model without allocating weights and counts its parameters.
CostReport count_params(const SctConfig& cfg);

std::string format_report(const CostReport& report, const std::string& unit, double scale);

}  // namespace sct
