#include "mtr/field_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace mtr {

static_assert(std::endian::native == std::endian::little, "field dumps assume a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic{'M', 'T', 'R', 'F', 'I', 'E', 'L', 'D'};

std::array<char, 32> make_header(const GridSpec& g, std::uint32_t dtype) {
  std::array<char, 32> h{};
  std::memcpy(h.data(), kMagic.data(), 8);
  const auto n = static_cast<std::uint32_t>(g.points);
  std::memcpy(h.data() + 8, &n, 4);
  std::memcpy(h.data() + 12, &dtype, 4);
  std::memcpy(h.data() + 16, &g.extent, 8);
  return h;
}

template <typename T>
void write_impl(const std::filesystem::path& path, const Field<T>& f, std::uint32_t dtype) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  const auto header = make_header(f.grid(), dtype);
  out.write(header.data(), header.size());
  out.write(reinterpret_cast<const char*>(f.values().data()),
            static_cast<std::streamsize>(f.size() * sizeof(T)));
  if (!out) throw ConfigError("short write to " + path.string());
}

}  // namespace

void write_field(const std::filesystem::path& path, const RealField& f) { write_impl(path, f, kDtypeReal); }
void write_field(const std::filesystem::path& path, const ComplexField& f) { write_impl(path, f, kDtypeComplex); }

std::variant<RealField, ComplexField> read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open field dump " + path.string());
  std::array<char, 32> h{};
  in.read(h.data(), h.size());
  if (!in || std::memcmp(h.data(), kMagic.data(), 8) != 0) throw ConfigError("not a field dump: " + path.string());
  std::uint32_t n = 0, dtype = 0;
  double L = 0.0;
  std::memcpy(&n, h.data() + 8, 4);
  std::memcpy(&dtype, h.data() + 12, 4);
  std::memcpy(&L, h.data() + 16, 8);
  const GridSpec grid(L, static_cast<int>(n));
  auto read_values = [&](auto& field) {
    using T = typename std::remove_reference_t<decltype(field.data())>::value_type;
    in.read(reinterpret_cast<char*>(field.values().data()), static_cast<std::streamsize>(field.size() * sizeof(T)));
    if (!in) throw ConfigError("truncated field dump " + path.string());
  };
  if (dtype == kDtypeReal) {
    RealField f(grid);
    read_values(f);
    return f;
  }
  if (dtype == kDtypeComplex) {
    ComplexField f(grid);
    read_values(f);
    return f;
  }
  throw ConfigError("unknown dtype tag in " + path.string());
}

RealField read_real_field(const std::filesystem::path& path) {
  auto v = read_field(path);
  if (auto* f = std::get_if<RealField>(&v)) return std::move(*f);
  throw ConfigError("expected a real field in " + path.string());
}

}  // namespace mtr
