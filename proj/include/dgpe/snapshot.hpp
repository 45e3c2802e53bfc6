#pragma once

#include <string>
#include <string_view>

#include "dgpe/spectral.hpp"

namespace dgpe {

/// Binary field snapshot: 64-byte header followed by little-endian f64
/// pairs (re, im) in grid storage order.
///
/// header: "DGPE" | version u32 | n0 n1 n2 u32 | box 3 x f64 | flags u32 | zero padding
/// flags bit 0: field is real.
inline constexpr unsigned kSnapshotVersion = 1;
inline constexpr std::size_t kSnapshotHeaderBytes = 64;

std::string encode_snapshot(const Field& u);

/// Throws std::runtime_error on a bad magic, version, size or grid.
Field decode_snapshot(std::string_view bytes);

void write_snapshot(const std::string& path, const Field& u);
Field read_snapshot(const std::string& path);

}  // namespace dgpe
