#include "hcap/common.hpp"

#include <algorithm>
#include <cmath>

namespace hcap {

Mat3 eulerXYZ(const Vec3& e) {
  return eulerXYZ<double>(e);
}

namespace {

Mat3 axisRotationDerivative(int axis, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 d = Mat3::Zero();
  switch (axis) {
    case 0:
      d << 0, 0, 0, 0, -s, -c, 0, c, -s;
      break;
    case 1:
      d << -s, 0, c, 0, 0, 0, -c, 0, -s;
      break;
    default:
      d << -s, -c, 0, c, -s, 0, 0, 0, 0;
      break;
  }
  return d;
}

} // namespace

Mat3 eulerXYZDerivative(const Vec3& e, int component) {
  Mat3 factors[3];
  for (int a = 0; a < 3; ++a) {
    factors[a] = (a == component) ? axisRotationDerivative(a, e[a]) : axisRotation<double>(a, e[a]);
  }
  return factors[0] * factors[1] * factors[2];
}

Vec3 eulerXYZFromMatrix(const Mat3& r) {
  // R = Rx(a) Ry(b) Rz(c): r(0,2) = sin(b), r(1,2) = -sin(a)cos(b), r(2,2) = cos(a)cos(b),
  // r(0,0) = cos(b)cos(c), r(0,1) = -cos(b)sin(c).
  const double sb = std::clamp(r(0, 2), -1.0, 1.0);
  const double b = std::asin(sb);
  double a = 0.0;
  double c = 0.0;
  if (std::abs(sb) < 1.0 - 1e-12) {
    a = std::atan2(-r(1, 2), r(2, 2));
    c = std::atan2(-r(0, 1), r(0, 0));
  } else {
    // Gimbal lock: only a +/- c is determined.
    a = std::atan2(r(2, 1), r(1, 1));
    c = 0.0;
  }
  return {a, b, c};
}

} // namespace hcap
