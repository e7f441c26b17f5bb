#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

namespace vortex::io {

// Little-endian fixed-width encoding shared by every binary artifact.
void write_u64(std::ostream& out, std::uint64_t value);
void write_f64(std::ostream& out, double value);
void write_f64s(std::ostream& out, std::span<const double> values);

std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
void read_f64s(std::istream& in, std::span<double> values);

/// 64-bit FNV-1a. Used for noise-path and artifact fingerprints.
std::uint64_t fnv1a(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(std::span<const double> values, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a_file(const std::string& path);

std::string hex64(std::uint64_t value);

}  // namespace vortex::io
