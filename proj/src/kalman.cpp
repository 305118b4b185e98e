#include "bruv/kalman.hpp"

#include <algorithm>

namespace bruv {

namespace {

Vector4 to_measurement(const BBox& b) { return {b.cx(), b.cy(), b.width(), b.height()}; }

// Heights can collapse under prediction; keep noise strictly positive.
double noise_height(const KalmanState& s) { return std::max(s.mean(3), 1e-6); }

Matrix8 symmetrized(const Matrix8& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

BBox KalmanState::box() const { return BBox::from_center(mean(0), mean(1), mean(2), mean(3)); }

const Matrix8& BoxKalmanFilter::transition() {
  static const Matrix8 f = [] {
    Matrix8 m = Matrix8::Identity();
    for (int i = 0; i < 4; ++i) m(i, i + 4) = 1.0;
    return m;
  }();
  return f;
}

KalmanState BoxKalmanFilter::initiate(const BBox& measurement) const {
  KalmanState s;
  s.mean.head<4>() = to_measurement(measurement);
  const double h = std::max(measurement.height(), 1e-6);
  const double p = 2.0 * noise_.position_scale * h;
  const double v = 10.0 * noise_.velocity_scale * h;
  Vector8 std_dev;
  std_dev << p, p, p, p, v, v, v, v;
  s.covariance = std_dev.array().square().matrix().asDiagonal();
  return s;
}

Matrix8 BoxKalmanFilter::process_noise(const KalmanState& state) const {
  const double h = noise_height(state);
  const double p = noise_.position_scale * h;
  const double v = noise_.velocity_scale * h;
  Vector8 var;
  var << p * p, p * p, p * p, p * p, v * v, v * v, v * v, v * v;
  return var.asDiagonal();
}

Matrix4 BoxKalmanFilter::measurement_noise(const KalmanState& state) const {
  const double p = noise_.position_scale * noise_height(state);
  return Matrix4::Identity() * (p * p);
}

KalmanState predict(const KalmanState& state, const Matrix8& process_noise) {
  const Matrix8& f = BoxKalmanFilter::transition();
  KalmanState out;
  out.mean = f * state.mean;
  out.covariance = symmetrized(f * state.covariance * f.transpose() + process_noise);
  return out;
}

KalmanState BoxKalmanFilter::predict(const KalmanState& state) const {
  return bruv::predict(state, process_noise(state));
}

KalmanState BoxKalmanFilter::update(const KalmanState& state, const BBox& measurement) const {
  using Matrix48 = Eigen::Matrix<double, 4, 8>;
  Matrix48 h = Matrix48::Zero();
  h.leftCols<4>().setIdentity();

  const Matrix4 r = measurement_noise(state);
  const Matrix4 innovation_cov = h * state.covariance * h.transpose() + r;
  // K = P Hᵀ S⁻¹, solved through the Cholesky factor of S.
  const Eigen::Matrix<double, 8, 4> gain =
      innovation_cov.llt().solve(h * state.covariance).transpose();

  KalmanState out;
  out.mean = state.mean + gain * (to_measurement(measurement) - h * state.mean);
  const Matrix8 i_kh = Matrix8::Identity() - gain * h;
  out.covariance = symmetrized(i_kh * state.covariance * i_kh.transpose() +
                               gain * r * gain.transpose());
  return out;
}

}  // namespace bruv
