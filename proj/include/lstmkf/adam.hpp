#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lstmkf/tape.hpp"

namespace lstmkf {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for one parameter list. The moments are allocated on
/// the first step and must keep matching the parameters' shapes afterwards.
struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

/// One bias-corrected Adam update of `params` with the gradients in `grads`.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
               AdamState& state);

/// Convenience overload using each parameter's own gradient.
void adam_step(std::span<Parameter* const> params, AdamState& state);

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping. max_norm <= 0 leaves gradients untouched.
double clip_gradient_norm(std::span<Parameter* const> params, double max_norm);

}  // namespace lstmkf
