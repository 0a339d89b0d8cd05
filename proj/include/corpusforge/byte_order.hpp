#pragma once

#include <bit>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstring>

namespace corpusforge::le {

// Fixed-width little-endian load/store, independent of host byte order.

template <std::unsigned_integral T>
inline T load(const unsigned char* p) {
  if constexpr (std::endian::native == std::endian::little) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
  } else {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
    return v;
  }
}

template <std::unsigned_integral T>
inline void store(unsigned char* p, T v) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(p, &v, sizeof(T));
  } else {
    for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
  }
}

// Width-dispatched variants for token payloads (width in {1, 2, 4}).
inline std::uint32_t load_width(const unsigned char* p, unsigned width) {
  switch (width) {
    case 1: return p[0];
    case 2: return load<std::uint16_t>(p);
    default: return load<std::uint32_t>(p);
  }
}

inline void store_width(unsigned char* p, std::uint32_t v, unsigned width) {
  switch (width) {
    case 1: p[0] = static_cast<unsigned char>(v); break;
    case 2: store<std::uint16_t>(p, static_cast<std::uint16_t>(v)); break;
    default: store<std::uint32_t>(p, v); break;
  }
}

}  // namespace corpusforge::le
