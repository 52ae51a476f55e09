// Test-only oracles and helpers. Deliberately written without reusing the
// library's own checksum or serializers.

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "embnet/wire.hpp"

namespace testsupport {

using embnet::Bytes;

// One's-complement sum with the carry folded back after every addition.
inline std::uint16_t oracle_checksum(const Bytes& data) {
  std::uint32_t sum = 0;
  for (std::size_t i = 0; i < data.size(); i += 2) {
    const std::uint32_t hi = data[i];
    const std::uint32_t lo = i + 1 < data.size() ? data[i + 1] : 0;
    sum += (hi << 8) | lo;
    if (sum > 0xffff) sum -= 0xffff;
  }
  return static_cast<std::uint16_t>(~sum & 0xffff);
}

// Same quantity via modular arithmetic: the one's-complement sum of 16-bit
// words is their plain sum mod 65535, with a nonzero multiple shown as 0xFFFF.
inline std::uint16_t modular_checksum(const Bytes& data) {
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < data.size(); i += 2) {
    total += (std::uint64_t{data[i]} << 8) | (i + 1 < data.size() ? data[i + 1] : 0);
  }
  std::uint64_t folded = total % 0xffff;
  if (folded == 0 && total != 0) folded = 0xffff;
  return static_cast<std::uint16_t>(~folded & 0xffff);
}

inline Bytes pseudo_header(const std::array<std::uint8_t, 4>& src,
                           const std::array<std::uint8_t, 4>& dst, std::uint8_t proto,
                           std::size_t len) {
  Bytes b(src.begin(), src.end());
  b.insert(b.end(), dst.begin(), dst.end());
  b.push_back(0);
  b.push_back(proto);
  b.push_back(static_cast<std::uint8_t>(len >> 8));
  b.push_back(static_cast<std::uint8_t>(len));
  return b;
}

inline Bytes concat(Bytes a, const Bytes& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline Bytes random_bytes(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<int> byte(0, 255);
  Bytes out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(byte(rng));
  return out;
}

inline Bytes hex(const std::string& text) {
  Bytes out;
  int nibble = -1;
  for (const char c : text) {
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else continue;
    if (nibble < 0) {
      nibble = v;
    } else {
      out.push_back(static_cast<std::uint8_t>(nibble << 4 | v));
      nibble = -1;
    }
  }
  return out;
}

}  // namespace testsupport
