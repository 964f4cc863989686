#pragma once

// Little-endian primitives shared by the checkpoint and matrix containers.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "rbreg/errors.hpp"

namespace rbreg::binary {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (int k = 0; k < 8; ++k) bytes[static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xffu);
  os.write(bytes.data(), 8);
}

inline std::uint64_t get_u64(std::istream& is) {
  std::array<unsigned char, 8> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!is) throw IoError("unexpected end of binary stream");
  std::uint64_t v = 0;
  for (int k = 7; k >= 0; --k) v = (v << 8) | bytes[static_cast<std::size_t>(k)];
  return v;
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) os.put(static_cast<char>((v >> (8 * k)) & 0xffu));
}

inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) {
    const int c = is.get();
    if (c == std::char_traits<char>::eof()) throw IoError("unexpected end of binary stream");
    v |= static_cast<std::uint32_t>(c & 0xff) << (8 * k);
  }
  return v;
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void put_string(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is, std::uint64_t max_len = 1u << 26) {
  const std::uint64_t len = get_u64(is);
  if (len > max_len) throw IoError("string length in binary stream is implausible");
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw IoError("unexpected end of binary stream");
  return s;
}

}  // namespace rbreg::binary
