#pragma once

#include "hcap/camproj.hpp"
#include "hcap/common.hpp"

#include <vector>

namespace hcap {

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ(); // unit length
  double sigma = 0.0;
  int landmark = 0;
};

/// Rays of all (camera, landmark) pairs with non-zero confidence, camera-major.
struct RayBundle {
  std::vector<Ray> rays;
};

/// Unit direction from the camera origin through pixel p, via E⁻¹ (p, 1, 1).
Vec3 rayDirection(const Camera& camera, const Vec2& p);

/// Point-to-ray squared distance sum, sigma-weighted.
double alignmentResidual(const Points& rotatedLandmarks, const Vec3& t, const RayBundle& rays);

/// Closed-form minimizer of the alignment residual over t. The system matrix
/// depends only on the rays, so t is affine in the landmarks.
class TranslationSolver {
 public:
  /// With `weighted` false every ray with sigma > 0 counts with weight 1.
  TranslationSolver(const RayBundle& rays, int landmarkCount, bool weighted = true);

  Vec3 solve(const Points& rotatedLandmarks) const;

  /// dL/dQ_m for every landmark given dL/dt.
  Points vjp(const Vec3& gradT) const;

  /// dt/dQ_m (3x3) for landmark m.
  Mat3 jacobian(int landmark) const;

  const Mat3& system() const {
    return W_;
  }
  double conditionNumber() const {
    return condition_;
  }

 private:
  Mat3 W_;
  Mat3 Winv_;
  Vec3 h_;
  std::vector<Mat3> S_;
  double condition_ = 0.0;
};

/// Convenience wrapper; throws DegenerateRaysError when the rays do not span 3D.
Vec3 solveTranslation(const Points& rotatedLandmarks, const RayBundle& rays, bool weighted = true);

constexpr double kMaxAlignmentCondition = 1e8;

} // namespace hcap
