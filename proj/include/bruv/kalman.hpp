#pragma once

#include <Eigen/Dense>

#include "bruv/core.hpp"

namespace bruv {

using Vector8 = Eigen::Matrix<double, 8, 1>;
using Matrix8 = Eigen::Matrix<double, 8, 8>;
using Vector4 = Eigen::Matrix<double, 4, 1>;
using Matrix4 = Eigen::Matrix<double, 4, 4>;

/// Box motion state: (cx, cy, w, h, vcx, vcy, vw, vh), velocities in units
/// per sampled frame.
struct KalmanState {
  Vector8 mean = Vector8::Zero();
  Matrix8 covariance = Matrix8::Zero();

  BBox box() const;
};

struct MotionNoise {
  double position_scale = 1.0 / 20.0;
  double velocity_scale = 1.0 / 160.0;
};

/// Constant-velocity filter on box center and size. Noise standard
/// deviations are proportional to the current box height.
class BoxKalmanFilter {
 public:
  explicit BoxKalmanFilter(MotionNoise noise = {}) : noise_(noise) {}

  /// New state with zero velocity centered on the measured box.
  KalmanState initiate(const BBox& measurement) const;

  /// Constant-velocity transition with process noise from the noise scales.
  KalmanState predict(const KalmanState& state) const;

  /// Joseph-form measurement update on (cx, cy, w, h).
  KalmanState update(const KalmanState& state, const BBox& measurement) const;

  Matrix8 process_noise(const KalmanState& state) const;
  Matrix4 measurement_noise(const KalmanState& state) const;

  static const Matrix8& transition();

 private:
  MotionNoise noise_;
};

/// mean' = F·mean, P' = F·P·Fᵀ + Q.
KalmanState predict(const KalmanState& state, const Matrix8& process_noise);

}  // namespace bruv
