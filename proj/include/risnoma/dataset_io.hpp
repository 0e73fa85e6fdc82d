#pragma once

#include <string>
#include <vector>

#include "risnoma/channel.hpp"

namespace risnoma {

// RNDS little-endian layout:
//   "RNDS" | u32 version=1 | u32 M | u32 N | u32 S | u64 seed
//   H: N×M complex row-major, each entry (re f64, im f64)
//   S records: h_d1 (M), h_d2 (M), h_r1 (N), h_r2 (N)
inline constexpr std::uint32_t kDatasetVersion = 1;

std::vector<char> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::vector<char> bytes);

void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

} // namespace risnoma
