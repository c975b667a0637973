#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>
#include <vector>

namespace hcap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = std::vector<Vec3>;

/// Malformed or inconsistent input data (files, assets, datasets).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: singular systems, NaN losses, degenerate blends.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed-form alignment cannot be solved because the rays do not span 3D.
class DegenerateRaysError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A point that should be projected lies behind the camera's near plane.
class BehindCameraError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Rotation matrix for XYZ Euler angles: R = Rx(e.x) * Ry(e.y) * Rz(e.z).
/// Used for the root rotation alpha and for graph node rotations.
template <typename S>
Eigen::Matrix<S, 3, 3> eulerXYZ(const Eigen::Matrix<S, 3, 1>& e);

Mat3 eulerXYZ(const Vec3& e);

/// Rotation about a single principal axis (0 = x, 1 = y, 2 = z).
template <typename S>
Eigen::Matrix<S, 3, 3> axisRotation(int axis, const S& angle);

/// Derivative of eulerXYZ(e) with respect to e[component].
Mat3 eulerXYZDerivative(const Vec3& e, int component);

/// Inverse of eulerXYZ; returns angles reproducing R (non-unique at gimbal lock).
Vec3 eulerXYZFromMatrix(const Mat3& rotation);

// ---------------------------------------------------------------------------

template <typename S>
Eigen::Matrix<S, 3, 3> axisRotation(int axis, const S& angle) {
  using std::cos;
  using std::sin;
  const S c = cos(angle);
  const S s = sin(angle);
  const S one(1.0);
  const S zero(0.0);
  Eigen::Matrix<S, 3, 3> r;
  switch (axis) {
    case 0:
      r << one, zero, zero, zero, c, -s, zero, s, c;
      break;
    case 1:
      r << c, zero, s, zero, one, zero, -s, zero, c;
      break;
    default:
      r << c, -s, zero, s, c, zero, zero, zero, one;
      break;
  }
  return r;
}

template <typename S>
Eigen::Matrix<S, 3, 3> eulerXYZ(const Eigen::Matrix<S, 3, 1>& e) {
  return axisRotation<S>(0, e[0]) * axisRotation<S>(1, e[1]) * axisRotation<S>(2, e[2]);
}

} // namespace hcap
