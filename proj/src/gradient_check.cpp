#include "lstmkf/gradient_check.hpp"

#include <algorithm>
#include <cmath>

namespace lstmkf {

namespace {

double evaluate(const ScalarFunction& fn) {
  Tape tape(false);
  const Var out = fn(tape);
  if (out.value().size() != 1) {
    throw DimensionError("gradient_check: function returned " + out.value().shape_string() +
                         ", expected 1x1");
  }
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw NonFiniteError("gradient_check: non-finite function value");
  return v;
}

}  // namespace

GradientCheckReport gradient_check(const ScalarFunction& fn, std::span<Parameter* const> params,
                                   double tolerance, double step, double floor) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape(true);
    const Var out = fn(tape);
    if (!out.value().all_finite()) throw NonFiniteError("gradient_check: non-finite function value");
    tape.backward(out);
  }

  GradientCheckReport report;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + step;
      const double plus = evaluate(fn);
      p->value[i] = original - step;
      const double minus = evaluate(fn);
      p->value[i] = original;

      const double numeric = (plus - minus) / (2.0 * step);
      const double analytic = p->grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel_err = abs_err / std::max({std::abs(analytic), std::abs(numeric), floor});
      report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
      if (rel_err > report.max_relative_error || report.entries_checked == 0) {
        report.max_relative_error = rel_err;
        report.worst_parameter = p->name;
        report.worst_index = i;
      }
      ++report.entries_checked;
    }
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace lstmkf
