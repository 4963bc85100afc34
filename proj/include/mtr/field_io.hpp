#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>

#include "mtr/lattice.hpp"

namespace mtr {

// Field dump layout (little-endian):
//   bytes  0..7   magic "MTRFIELD"
//   bytes  8..11  uint32 n (points per axis)
//   bytes 12..15  uint32 dtype tag: 1 = float64 real, 2 = complex128 (re, im)
//   bytes 16..23  float64 L (half-box extent)
//   bytes 24..31  reserved, zero
// followed by n^3 values in the lattice site ordering.
inline constexpr std::uint32_t kDtypeReal = 1;
inline constexpr std::uint32_t kDtypeComplex = 2;

void write_field(const std::filesystem::path& path, const RealField& f);
void write_field(const std::filesystem::path& path, const ComplexField& f);

std::variant<RealField, ComplexField> read_field(const std::filesystem::path& path);
RealField read_real_field(const std::filesystem::path& path);

}  // namespace mtr
