#pragma once

#include <functional>
#include <string>
#include <vector>

#include "madapter/autodiff.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

/// Probe step for central differences. Float32 forward rounding puts ~1e-7
/// relative noise on the loss, so the f32 build needs a much larger step.
inline constexpr Real kDefaultFdStep = sizeof(Real) == sizeof(double) ? Real(1e-6) : Real(1e-2);

/// Central-difference estimate of d f / d param, same shape as the
/// parameter. `eval` must be deterministic; the parameter is restored
/// after each probe.
SeqTensor finite_diff_grad(const std::function<double()>& eval, Parameter& param,
                           Real step = kDefaultFdStep);

/// Comparison of analytic and numeric gradients of one parameter tensor.
/// relative = ‖a − n‖₂ / max(‖a‖₂, ‖n‖₂); the check passes when
/// ‖a − n‖₂ <= abs_floor or relative < rel_tol. Float32 central differences
/// carry ~1e-4 absolute rounding noise per entry, so the error is taken over
/// the whole tensor rather than entry by entry.
struct GradComparison {
  double relative = 0.0;
  double absolute = 0.0;        // ‖a − n‖₂
  double worst_entry = 0.0;     // max |a_i − n_i|
  bool finite = true;
  bool ok = true;
  double scale = 0.0;  // max(‖a‖₂, ‖n‖₂)
  double abs_floor = 0.0;
  bool passed() const { return ok; }
  /// Relative error, or 0 for a gradient too small to carry one.
  double effective_relative() const { return scale <= abs_floor ? 0.0 : relative; }
};

GradComparison compare_gradients(const SeqTensor& analytic, const SeqTensor& numeric,
                                 double rel_tol = 1e-3, double abs_floor = 1e-5);

/// Result of checking one named parameter.
struct ParamCheck {
  std::string name;
  GradComparison cmp;
};

/// Runs `loss_on_tape` once with gradients, then probes each parameter in
/// `params` by central differences. `loss_on_tape` must build a scalar loss
/// on the given tape from the current parameter values.
std::vector<ParamCheck> check_parameters(const std::function<Var(Tape&)>& loss_on_tape,
                                         const std::vector<Parameter*>& params,
                                         Real step = kDefaultFdStep, double rel_tol = 1e-3,
                                         double abs_floor = 1e-5);

}  // namespace MADAPTER_NS
}  // namespace madapter
