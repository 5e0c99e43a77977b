// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sct/layers.hpp"

namespace sct {

// "SCTW1", u32 count, then per parameter: u32 name length, name bytes,
// u32 rank, u32 dims, float32 values. All little-endian. Values are
// stored in single precision, so a save/load cycle rounds each parameter
// to the nearest float; a second cycle is exact.
std::vector<std::uint8_t> encode_checkpoint(const ParameterStore& store);
// Overwrites the values of every parameter in `store`. The file must hold
// exactly the same names and shapes.
void decode_checkpoint(const std::vector<std::uint8_t>& bytes, ParameterStore& store);

void save_checkpoint(const ParameterStore& store, const std::string& path);
void load_checkpoint(ParameterStore& store, const std::string& path);

}  // namespace sct
