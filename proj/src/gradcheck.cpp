#include "madapter/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "madapter/errors.hpp"

namespace madapter {
inline namespace MADAPTER_NS {

namespace {

struct Probe {
  double value;
  std::uint64_t branch;
};

Probe probe(const std::function<double()>& eval) {
  debug::reset_kink_digest();
  const double v = eval();
  return {v, debug::kink_digest()};
}

struct KinkScope {
  KinkScope() { debug::set_kink_tracking(true); }
  ~KinkScope() { debug::set_kink_tracking(false); }
};

}  // namespace

SeqTensor finite_diff_grad(const std::function<double()>& eval, Parameter& param,
                           Real step) {
  KinkScope scope;
  SeqTensor grad(param.value.shape(), 0.0f);
  auto values = param.value.data();
  const std::uint64_t base_branch = probe(eval).branch;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Real original = values[i];
    // A probe that moves a ReLU input across zero measures the kink, not the
    // slope; shrink the step until both probes stay on the base branch.
    Real h = step;
    for (int attempt = 0;; ++attempt) {
      const Real up = original + h;
      const Real down = original - h;
      values[i] = up;
      const Probe plus = probe(eval);
      values[i] = down;
      const Probe minus = probe(eval);
      values[i] = original;
      const bool same_branch = plus.branch == base_branch && minus.branch == base_branch;
      if (same_branch || attempt == 3) {
        // Divide by the realized step, not the nominal one.
        grad[i] = static_cast<Real>((plus.value - minus.value) /
                                     (static_cast<double>(up) - static_cast<double>(down)));
        break;
      }
      h *= Real(0.1);
    }
  }
  return grad;
}

GradComparison compare_gradients(const SeqTensor& analytic, const SeqTensor& numeric,
                                 double rel_tol, double abs_floor) {
  if (analytic.shape() != numeric.shape()) {
    throw DimensionError("compare_gradients: " + shape_string(analytic.shape()) + " vs " +
                         shape_string(numeric.shape()));
  }
  GradComparison out;
  out.abs_floor = abs_floor;
  double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    if (!std::isfinite(a) || !std::isfinite(n)) out.finite = false;
    const double diff = a - n;
    out.worst_entry = std::max(out.worst_entry, std::abs(diff));
    diff_sq += diff * diff;
    a_sq += a * a;
    n_sq += n * n;
  }
  out.absolute = std::sqrt(diff_sq);
  const double scale = std::max(std::sqrt(a_sq), std::sqrt(n_sq));
  out.scale = scale;
  out.relative = scale > 0.0 ? out.absolute / scale : 0.0;
  out.ok = out.finite && (out.absolute <= abs_floor || out.relative < rel_tol);
  return out;
}

std::vector<ParamCheck> check_parameters(const std::function<Var(Tape&)>& loss_on_tape,
                                         const std::vector<Parameter*>& params,
                                         Real step, double rel_tol, double abs_floor) {
  for (auto* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(loss_on_tape(tape));
  }
  auto eval = [&]() {
    Tape tape(false);
    return static_cast<double>(loss_on_tape(tape).value()[0]);
  };
  std::vector<ParamCheck> out;
  out.reserve(params.size());
  for (auto* p : params) {
    const SeqTensor numeric = finite_diff_grad(eval, *p, step);
    out.push_back({p->name, compare_gradients(p->grad, numeric, rel_tol, abs_floor)});
  }
  return out;
}

}  // namespace MADAPTER_NS
}  // namespace madapter
