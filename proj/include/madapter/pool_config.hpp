#pragma once

#include "madapter/real.hpp"

#include <cstddef>
#include <string>

namespace madapter {
inline namespace MADAPTER_NS {

/// Geometry of a 1D convolutional pooling module.
struct PoolConfig {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  static constexpr PoolConfig identity() { return {1, 1, 0}; }
  friend bool operator==(const PoolConfig&, const PoolConfig&) = default;
};

std::string to_string(const PoolConfig& cfg);

/// floor((L + 2p - k) / s) + 1. Throws LengthError when L + 2p < k and
/// std::invalid_argument when k or s is zero.
std::size_t out_len(std::size_t length, const PoolConfig& cfg);

}  // namespace MADAPTER_NS
}  // namespace madapter
