#include "vortexlab/binary_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "vortexlab/errors.hpp"

namespace vortex::io {

namespace {

std::array<char, 8> to_le(std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  return b;
}

std::uint64_t from_le(const std::array<char, 8>& b) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

}  // namespace

void write_u64(std::ostream& out, std::uint64_t value) {
  const auto b = to_le(value);
  out.write(b.data(), 8);
}

void write_f64(std::ostream& out, double value) { write_u64(out, std::bit_cast<std::uint64_t>(value)); }

void write_f64s(std::ostream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (double v : values) write_f64(out, v);
  }
}

std::uint64_t read_u64(std::istream& in) {
  std::array<char, 8> b{};
  in.read(b.data(), 8);
  if (!in) throw ValidationError("truncated binary file");
  return from_le(b);
}

double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

void read_f64s(std::istream& in, std::span<double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    if (!in) throw ValidationError("truncated binary file");
  } else {
    for (double& v : values) v = read_f64(in);
  }
}

std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a(std::span<const double> values, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (double v : values) {
    const auto b = to_le(std::bit_cast<std::uint64_t>(v));
    h = fnv1a(std::as_bytes(std::span<const char>(b.data(), b.size())), h);
  }
  return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return fnv1a(std::as_bytes(std::span<const char>(data.data(), data.size())));
}

std::string hex64(std::uint64_t value) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << value;
  return s.str();
}

}  // namespace vortex::io
