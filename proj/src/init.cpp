#include "madapter/init.hpp"

#include <cmath>

#include "madapter/errors.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

SeqTensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  SeqTensor t(std::move(shape));
  const Real bound = Real(1.0) / std::sqrt(static_cast<Real>(fan_in));
  std::uniform_real_distribution<Real> dist(-bound, bound);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

ConvWeights make_conv(ParamStore& store, const std::string& prefix, std::size_t c_in,
                      std::size_t c_out, std::size_t kernel, Rng& rng) {
  ConvWeights conv;
  conv.weight = &store.add(prefix + ".weight",
                           uniform_init({c_out, c_in, kernel}, c_in * kernel, rng));
  conv.bias = &store.add(prefix + ".bias", uniform_init({c_out}, c_in * kernel, rng));
  return conv;
}

void set_identity_conv(const ConvWeights& conv, std::size_t tap) {
  auto& w = conv.weight->value;
  const std::size_t c_out = w.dim(0);
  const std::size_t c_in = w.dim(1);
  const std::size_t k = w.dim(2);
  if (c_out != c_in || tap >= k) {
    throw DimensionError("identity conv needs square channels, got " +
                         shape_string(w.shape()));
  }
  w.fill(Real(0.0));
  for (std::size_t c = 0; c < c_out; ++c) w[(c * c_in + c) * k + tap] = Real(1.0);
  conv.bias->value.fill(Real(0.0));
}

Var apply_conv(Tape& tape, Var x, const ConvWeights& conv, const PoolConfig& cfg) {
  return conv1d(x, tape.param(*conv.weight), tape.param(*conv.bias), cfg);
}

}  // namespace MADAPTER_NS
}  // namespace madapter
