#include "lstmkf/kalman.hpp"

namespace lstmkf {

void LinearKfModel::validate() const {
  if (A.rows() != A.cols()) throw DimensionError("LinearKfModel: A " + A.shape_string() + " is not square");
  if (H.cols() != A.rows()) {
    throw DimensionError("LinearKfModel: H " + H.shape_string() + " incompatible with A " + A.shape_string());
  }
  require_same_shape("LinearKfModel Q", Q, A);
  if (R.rows() != H.rows() || R.cols() != H.rows()) {
    throw DimensionError("LinearKfModel: R " + R.shape_string() + " incompatible with H " + H.shape_string());
  }
}

GaussianBelief kf_predict(const GaussianBelief& belief, const LinearKfModel& model) {
  if (belief.mean.rows() != model.A.cols() || !belief.cov.same_shape(model.A)) {
    throw DimensionError("kf_predict: belief " + belief.mean.shape_string() + "/" + belief.cov.shape_string() +
                         " incompatible with A " + model.A.shape_string());
  }
  require_same_shape("kf_predict Q", model.Q, model.A);
  GaussianBelief out;
  out.mean = matmul(model.A, belief.mean);
  out.cov = symmetrize(matmul(matmul(model.A, belief.cov), transpose(model.A)) + model.Q);
  return out;
}

GaussianBelief kf_update(const GaussianBelief& belief, const Matrix& z, const LinearKfModel& model) {
  if (z.rows() != model.H.rows() || z.cols() != 1) {
    throw DimensionError("kf_update: measurement " + z.shape_string() + " incompatible with H " +
                         model.H.shape_string());
  }
  if (belief.mean.rows() != model.H.cols() || belief.cov.rows() != model.H.cols()) {
    throw DimensionError("kf_update: belief " + belief.mean.shape_string() + " incompatible with H " +
                         model.H.shape_string());
  }
  const Matrix ht = transpose(model.H);
  const Matrix h_cov = matmul(model.H, belief.cov);
  const Matrix innovation_cov = matmul(h_cov, ht) + model.R;
  // S K^T = H P  (S symmetric), so K = (S^-1 H P)^T = P H^T S^-1.
  const Matrix gain = transpose(solve_spd(innovation_cov, h_cov));

  GaussianBelief out;
  out.mean = belief.mean + matmul(gain, z - matmul(model.H, belief.mean));
  const Matrix i_kh = Matrix::identity(belief.cov.rows()) - matmul(gain, model.H);
  out.cov = symmetrize(matmul(i_kh, belief.cov));
  return out;
}

std::vector<GaussianBelief> kf_filter(const Matrix& measurements, const LinearKfModel& model,
                                      const GaussianBelief& init) {
  std::vector<GaussianBelief> out;
  out.reserve(measurements.rows());
  GaussianBelief belief = init;
  for (std::size_t t = 0; t < measurements.rows(); ++t) {
    try {
      belief = kf_update(kf_predict(belief, model), measurements.row(t), model);
    } catch (const std::exception& e) {
      throw FilterStepError(t, e.what());
    }
    out.push_back(belief);
  }
  return out;
}

GaussianBelief initial_belief(const Matrix& first_measurement, const LinearKfModel& model) {
  return {matmul(transpose(model.H), first_measurement), Matrix::identity(model.state_dim())};
}

Matrix kf_estimates(const Matrix& measurements, const LinearKfModel& model) {
  Matrix out(measurements.rows(), model.measurement_dim());
  if (measurements.rows() == 0) return out;
  const auto beliefs = kf_filter(measurements, model, initial_belief(measurements.row(0), model));
  for (std::size_t t = 0; t < beliefs.size(); ++t) out.set_row(t, matmul(model.H, beliefs[t].mean));
  return out;
}

namespace {

LinearKfModel kinematic_model(std::size_t pose_dim, std::size_t order, double dt, double q_scale,
                              double r_scale) {
  if (pose_dim == 0) throw std::invalid_argument("kinematic model: pose_dim must be >= 1");
  if (!(dt > 0.0) || !(q_scale >= 0.0) || !(r_scale >= 0.0)) {
    throw std::invalid_argument("kinematic model: dt must be positive and noise scales non-negative");
  }
  const std::size_t n = pose_dim * order;
  LinearKfModel m;
  m.A = Matrix::identity(n);
  // Block (i, j) for j > i holds dt^(j-i) / (j-i)!.
  for (std::size_t bi = 0; bi < order; ++bi) {
    double coeff = 1.0;
    for (std::size_t bj = bi + 1; bj < order; ++bj) {
      coeff *= dt / static_cast<double>(bj - bi);
      for (std::size_t k = 0; k < pose_dim; ++k) m.A(bi * pose_dim + k, bj * pose_dim + k) = coeff;
    }
  }
  m.H = Matrix(pose_dim, n);
  for (std::size_t k = 0; k < pose_dim; ++k) m.H(k, k) = 1.0;
  m.Q = Matrix(n, n);
  for (std::size_t k = 0; k < pose_dim; ++k) {
    const std::size_t idx = (order - 1) * pose_dim + k;
    m.Q(idx, idx) = q_scale;
  }
  m.R = Matrix::identity(pose_dim) * r_scale;
  return m;
}

}  // namespace

LinearKfModel build_cv_model(std::size_t pose_dim, double dt, double q_scale, double r_scale) {
  return kinematic_model(pose_dim, 2, dt, q_scale, r_scale);
}

LinearKfModel build_ca_model(std::size_t pose_dim, double dt, double q_scale, double r_scale) {
  return kinematic_model(pose_dim, 3, dt, q_scale, r_scale);
}

Matrix ema_filter(const Matrix& measurements, std::size_t window) {
  if (window == 0) throw std::invalid_argument("ema_filter: window must be >= 1");
  const double alpha = 2.0 / (static_cast<double>(window) + 1.0);
  Matrix out(measurements.rows(), measurements.cols());
  for (std::size_t t = 0; t < measurements.rows(); ++t) {
    for (std::size_t k = 0; k < measurements.cols(); ++k) {
      out(t, k) = t == 0 ? measurements(0, k)
                         : alpha * measurements(t, k) + (1.0 - alpha) * out(t - 1, k);
    }
  }
  return out;
}

}  // namespace lstmkf
