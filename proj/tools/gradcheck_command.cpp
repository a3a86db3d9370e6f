#include "gradcheck_command.hpp"

#include "madapter/gradient_suite.hpp"

static_assert(sizeof(madapter::Real) == sizeof(double),
              "the gradient check runs on the double-precision build");

GradcheckResult run_gradcheck(std::uint64_t seed, const std::string& sign_flip_op) {
  namespace md = madapter;
  md::debug::set_sign_flip_fault(sign_flip_op.empty() ? nullptr : sign_flip_op.c_str());
  std::vector<md::SuiteCheck> checks;
  try {
    checks = md::run_gradient_suite(seed);
  } catch (...) {
    md::debug::set_sign_flip_fault(nullptr);
    throw;
  }
  md::debug::set_sign_flip_fault(nullptr);

  GradcheckResult out;
  for (const auto& g : md::summarize_groups(checks)) {
    out.groups.push_back({g.group, g.tensors, g.worst_relative, g.worst_param, g.passed});
  }
  for (const auto& c : checks) {
    if (!c.check.cmp.passed()) {
      out.failures.push_back(
          {c.case_name + ":" + c.check.name, c.check.cmp.relative, c.check.cmp.absolute});
    }
  }
  return out;
}
