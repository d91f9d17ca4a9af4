#pragma once

// Little-endian / big-endian primitive readers and writers shared by the
// on-disk formats.

#include "orthotail/error.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace orthotail::detail {

template <typename T>
T byteswap(T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  return std::bit_cast<T>(bytes);
}

template <typename T>
void write_le(std::ostream& os, T value) {
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is, const std::string& what) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  require(is.gcount() == static_cast<std::streamsize>(sizeof(T)), ErrorCode::kTruncatedFile,
          "unexpected end of file while reading " + what);
  return value;
}

template <typename T>
T read_le(std::istream& is, const std::string& what) {
  T value = read_raw<T>(is, what);
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  return value;
}

template <typename T>
T read_be(std::istream& is, const std::string& what) {
  T value = read_raw<T>(is, what);
  if constexpr (std::endian::native == std::endian::little) value = byteswap(value);
  return value;
}

template <typename T>
void write_be(std::ostream& os, T value) {
  if constexpr (std::endian::native == std::endian::little) value = byteswap(value);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& what) {
  char got[4] = {};
  is.read(got, 4);
  require(is.gcount() == 4, ErrorCode::kTruncatedFile, what + " header truncated");
  require(std::memcmp(got, magic, 4) == 0, ErrorCode::kBadMagic, what + " has wrong magic bytes");
}

}  // namespace orthotail::detail
