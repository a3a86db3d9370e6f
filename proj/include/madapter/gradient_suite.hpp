#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "madapter/gradcheck.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

/// Finite-difference checks over every module at desk scale (D=8, h=2,
/// L=12, pooling k3 s2 p1). Parameters are grouped as mpsa, pool_x,
/// layer_norm, ffn, cnn_adapter, transformer_adapter, frontend, decoder and
/// input. `seed` drives weights, layer-norm parameters, inputs and the
/// random output weighting.
struct SuiteCheck {
  std::string group;
  std::string case_name;  // e.g. "layer/inside"
  ParamCheck check;
};

std::vector<SuiteCheck> run_gradient_suite(std::uint64_t seed);

struct GroupSummary {
  std::string group;
  std::size_t tensors = 0;
  double worst_relative = 0.0;  // worst effective relative error
  std::string worst_param;      // "case:param"
  bool passed = true;
};

/// One row per group in first-seen order.
std::vector<GroupSummary> summarize_groups(const std::vector<SuiteCheck>& checks);

}  // namespace MADAPTER_NS
}  // namespace madapter
