#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "lstmkf/tape.hpp"

namespace lstmkf {

struct GradientCheckReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
  bool passed = false;
};

/// Scalar-valued function built from tape primitives. It must obtain the
/// checked parameters through tape.param() so reverse mode can see them.
using ScalarFunction = std::function<Var(Tape&)>;

/**
 * Compares reverse-mode gradients of `fn` with central finite differences.
 *
 * Relative error per entry is |analytic - numeric| / max(|analytic|, |numeric|, floor),
 * where `floor` keeps entries whose true gradient is ~0 from reporting noise
 * as a large relative error. Throws NonFiniteError if the function value is
 * not finite. Parameter values are restored on return; gradients are left
 * holding the analytic result.
 */
GradientCheckReport gradient_check(const ScalarFunction& fn, std::span<Parameter* const> params,
                                   double tolerance, double step = 1e-5, double floor = 1e-6);

}  // namespace lstmkf
