#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lstmkf/matrix.hpp"
#include "lstmkf/trajectory.hpp"

namespace lstmkf {

/// Error raised while filtering a sequence; carries the 0-based step index.
class FilterStepError : public std::runtime_error {
 public:
  FilterStepError(std::size_t step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct GaussianBelief {
  Matrix mean;  // n x 1
  Matrix cov;   // n x n
};

/// x' = A x + w, w ~ N(0, Q);  z = H x + v, v ~ N(0, R).
struct LinearKfModel {
  Matrix A;
  Matrix H;
  Matrix Q;
  Matrix R;

  std::size_t state_dim() const { return A.rows(); }
  std::size_t measurement_dim() const { return H.rows(); }
  void validate() const;
};

/// mean' = A mean, cov' = sym(A cov A^T + Q).
GaussianBelief kf_predict(const GaussianBelief& belief, const LinearKfModel& model);

/// Gain K = cov H^T (H cov H^T + R)^-1 computed with a Cholesky solve; the
/// covariance update is sym((I - K H) cov).
GaussianBelief kf_update(const GaussianBelief& belief, const Matrix& z, const LinearKfModel& model);

/// Posterior beliefs for every row of `measurements` (T x m), starting from `init`.
std::vector<GaussianBelief> kf_filter(const Matrix& measurements, const LinearKfModel& model,
                                      const GaussianBelief& init);

/// Mean = H^T z (pose block set from the measurement, derivatives zero), cov = I.
GaussianBelief initial_belief(const Matrix& first_measurement, const LinearKfModel& model);

/// Runs kf_filter from initial_belief(z_1) and returns H * mean per step (T x m).
Matrix kf_estimates(const Matrix& measurements, const LinearKfModel& model);

/**
 * Constant-velocity model, state [pose; velocity] (2 * pose_dim):
 *   pose' = pose + dt * velocity, velocity' = velocity + w
 * Q = q_scale * I on the velocity block and 0 elsewhere, R = r_scale * I.
 */
LinearKfModel build_cv_model(std::size_t pose_dim, double dt, double q_scale, double r_scale);

/**
 * Constant-acceleration model, state [pose; velocity; acceleration]:
 *   pose' = pose + dt v + dt^2/2 a, v' = v + dt a, a' = a + w
 * Q = q_scale * I on the acceleration block, R = r_scale * I.
 */
LinearKfModel build_ca_model(std::size_t pose_dim, double dt, double q_scale, double r_scale);

/// Exponential smoothing with alpha = 2 / (window + 1); out_1 = z_1.
Matrix ema_filter(const Matrix& measurements, std::size_t window);

}  // namespace lstmkf
