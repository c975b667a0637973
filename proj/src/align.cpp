#include "hcap/align.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>

namespace hcap {

Vec3 rayDirection(const Camera& camera, const Vec2& p) {
  Eigen::FullPivLU<Eigen::Matrix4d> lu(camera.E);
  if (!lu.isInvertible()) {
    throw NumericalError("camera projection matrix is singular");
  }
  const Eigen::Vector4d h = lu.solve(Eigen::Vector4d(p[0], p[1], 1.0, 1.0));
  const Vec3 d = h.head<3>() / h[3] - camera.origin;
  return d.normalized();
}

double alignmentResidual(const Points& rotatedLandmarks, const Vec3& t, const RayBundle& rays) {
  double sum = 0.0;
  for (const auto& r : rays.rays) {
    if (r.sigma <= 0.0) {
      continue;
    }
    sum += r.sigma * (rotatedLandmarks[r.landmark] + t - r.origin).cross(r.direction).squaredNorm();
  }
  return sum;
}

TranslationSolver::TranslationSolver(const RayBundle& rays, int landmarkCount, bool weighted)
    : W_(Mat3::Zero()), Winv_(Mat3::Zero()), h_(Vec3::Zero()), S_(landmarkCount, Mat3::Zero()) {
  for (const auto& r : rays.rays) {
    if (r.sigma <= 0.0) {
      continue;
    }
    if (r.landmark < 0 || r.landmark >= landmarkCount) {
      throw std::invalid_argument("ray references landmark " + std::to_string(r.landmark));
    }
    const double w = weighted ? r.sigma : 1.0;
    const Mat3 P = w * (Mat3::Identity() - r.direction * r.direction.transpose());
    W_ += P;
    S_[r.landmark] += P;
    h_ += P * r.origin;
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(W_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()[0];
  const double hi = eig.eigenvalues()[2];
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition_ <= kMaxAlignmentCondition)) {
    throw DegenerateRaysError("alignment rays are degenerate (condition number " + std::to_string(condition_) + ")");
  }
  Winv_ = W_.inverse();
}

Vec3 TranslationSolver::solve(const Points& rotatedLandmarks) const {
  Vec3 rhs = h_;
  for (size_t m = 0; m < S_.size(); ++m) {
    rhs -= S_[m] * rotatedLandmarks[m];
  }
  return Winv_ * rhs;
}

Points TranslationSolver::vjp(const Vec3& gradT) const {
  const Vec3 u = Winv_.transpose() * gradT;
  Points out(S_.size());
  for (size_t m = 0; m < S_.size(); ++m) {
    out[m] = -(S_[m].transpose() * u);
  }
  return out;
}

Mat3 TranslationSolver::jacobian(int landmark) const {
  return -Winv_ * S_[landmark];
}

Vec3 solveTranslation(const Points& rotatedLandmarks, const RayBundle& rays, bool weighted) {
  return TranslationSolver(rays, static_cast<int>(rotatedLandmarks.size()), weighted).solve(rotatedLandmarks);
}

} // namespace hcap
