#pragma once

#include <cstdint>
#include <string>
#include <vector>

// Precision-neutral view of the gradient suite so the float CLI can drive the
// double-precision build.
struct GradcheckGroup {
  std::string group;
  std::size_t tensors = 0;
  double worst_relative = 0.0;
  std::string worst_param;
  bool passed = true;
};

struct GradcheckFailure {
  std::string param;  // "case:param"
  double relative = 0.0;
  double absolute = 0.0;
};

struct GradcheckResult {
  std::vector<GradcheckGroup> groups;
  std::vector<GradcheckFailure> failures;
  bool passed() const { return failures.empty(); }
};

/// `sign_flip_op`, when nonempty, negates that operation's backward rule for
/// the duration of the run.
GradcheckResult run_gradcheck(std::uint64_t seed, const std::string& sign_flip_op);
