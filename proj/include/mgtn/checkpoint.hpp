#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mgtn/layers.hpp"
#include "mgtn/tensor.hpp"

namespace mgtn {

// Versioned binary container of named parameter arrays. Writing the same
// parameters twice produces identical bytes; loading rejects unknown
// versions and malformed payloads.
//
// Layout (little-endian):
//   magic "MGTNCKP1", u32 version, u32 array count, then per array:
//   u32 name length, name bytes, u32 order, u64 dims[order], f64 data[].
struct NamedArray {
    std::string name;
    DenseTensor value;
};

void save_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays);
void save_checkpoint(const std::string& path, const AgentParams& params);

std::vector<NamedArray> load_checkpoint(const std::string& path);

// Fills `params` from a checkpoint; every expected array must be present
// with the exact shape, otherwise the error names the offending array.
void load_checkpoint_into(const std::string& path, AgentParams& params);

} // namespace mgtn
