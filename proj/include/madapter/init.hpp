#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "madapter/autodiff.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

using Rng = std::mt19937_64;

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
SeqTensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng);

/// 1D convolution parameters: weight [C_out×C_in×k], bias [C_out].
struct ConvWeights {
  Parameter* weight = nullptr;
  Parameter* bias = nullptr;
};

ConvWeights make_conv(ParamStore& store, const std::string& prefix, std::size_t c_in,
                      std::size_t c_out, std::size_t kernel, Rng& rng);

/// Sets a square conv to the per-channel identity at kernel tap `tap`, zero bias.
void set_identity_conv(const ConvWeights& conv, std::size_t tap = 0);

Var apply_conv(Tape& tape, Var x, const ConvWeights& conv, const PoolConfig& cfg);

}  // namespace MADAPTER_NS
}  // namespace madapter
