// Copyright 2026 The irsce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "irsce/core/error.hpp"

namespace irsce::io {

// Little-endian fixed-width encoding shared by the dataset and checkpoint
// formats.

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void magic(std::string_view tag) { os_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

  void u8(std::uint8_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void c128(std::complex<double> z) {
    f64(z.real());
    f64(z.imag());
  }

  /// u64 length, then the values.
  void f32_array(std::span<const float> values) {
    u64(values.size());
    for (const float v : values) f32(v);
  }

  bool good() const { return os_.good(); }

 private:
  template <typename U>
  void put(U v) {
    std::array<char, sizeof(U)> bytes;
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    os_.write(bytes.data(), bytes.size());
  }

  std::ostream& os_;
};

/// Reader whose short reads throw FormatError("truncated <what>").
class Reader {
 public:
  Reader(std::istream& is, std::string what) : is_(is), what_(std::move(what)) {}

  std::string magic(std::size_t n) {
    std::string tag(n, '\0');
    read(tag.data(), n);
    return tag;
  }

  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::complex<double> c128() {
    const double re = f64();
    return {re, f64()};
  }

  /// Reads a u64-prefixed float array; `limit` guards against absurd lengths
  /// from corrupt files.
  std::vector<float> f32_array(std::uint64_t limit) {
    const std::uint64_t n = u64();
    if (n > limit) throw FormatError(what_ + ": array length " + std::to_string(n) + " exceeds " + std::to_string(limit));
    std::vector<float> out(n);
    for (auto& v : out) v = f32();
    return out;
  }

  bool at_end() { return is_.peek() == std::char_traits<char>::eof(); }

  [[noreturn]] void truncated() const { throw FormatError("truncated " + what_); }

 private:
  void read(char* dst, std::size_t n) {
    is_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) truncated();
  }

  template <typename U>
  U get() {
    std::array<unsigned char, sizeof(U)> bytes;
    read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
    return v;
  }

  std::istream& is_;
  std::string what_;
};

}  // namespace irsce::io
