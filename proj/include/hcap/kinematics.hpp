#pragma once

#include "hcap/assets.hpp"
#include "hcap/common.hpp"

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

namespace hcap {

struct PoseParams {
  Eigen::VectorXd theta; // joint angles, one per DoF
  Vec3 alpha = Vec3::Zero(); // root rotation relative to the input camera (XYZ Euler)
  Vec3 t = Vec3::Zero(); // world translation, solved by the alignment layer

  static PoseParams rest(const Skeleton& skeleton) {
    PoseParams p;
    p.theta = Eigen::VectorXd::Zero(skeleton.dofCount());
    return p;
  }
};

template <typename S>
struct RigidTransform {
  Eigen::Matrix<S, 3, 3> rotation = Eigen::Matrix<S, 3, 3>::Identity();
  Eigen::Matrix<S, 3, 1> translation = Eigen::Matrix<S, 3, 1>::Zero();

  Eigen::Matrix<S, 3, 1> apply(const Eigen::Matrix<S, 3, 1>& x) const {
    return rotation * x + translation;
  }
};

using Rigid = RigidTransform<double>;

/// Scalar used for forward-mode derivatives with respect to (theta, alpha).
using PoseDual = Eigen::AutoDiffScalar<Eigen::VectorXd>;

/// World (camera-root-relative) frame of every joint: rotation and position.
template <typename S>
std::vector<RigidTransform<S>> jointFrames(
    const Skeleton& skeleton,
    const Eigen::Matrix<S, Eigen::Dynamic, 1>& theta,
    const Eigen::Matrix<S, 3, 1>& alpha);

/// Rest-to-posed transform of every bone: x -> R_j (x - rest_j) + p_j.
template <typename S>
std::vector<RigidTransform<S>> boneTransforms(
    const Skeleton& skeleton,
    const Eigen::Matrix<S, Eigen::Dynamic, 1>& theta,
    const Eigen::Matrix<S, 3, 1>& alpha);

/// Camera-root-relative landmark positions P_c' (root joint at the origin).
Points forwardLandmarks(const Skeleton& skeleton, const Eigen::VectorXd& theta, const Vec3& alpha);

/// Landmarks and their Jacobian: rows 3m..3m+2, columns [theta..., alpha0..2].
struct LandmarkJacobian {
  Points positions;
  Eigen::MatrixXd jacobian;
};

LandmarkJacobian forwardLandmarksJacobian(const Skeleton& skeleton, const Eigen::VectorXd& theta, const Vec3& alpha);

/// P_m = R^T P_c',m + t for every landmark (R is the input camera's world-to-camera rotation).
Points toWorld(const Points& cameraRelative, const Mat3& inputRotation, const Vec3& t);

// --- dual quaternions -------------------------------------------------------

template <typename S>
struct DualQuat {
  Eigen::Matrix<S, 4, 1> real; // (w, x, y, z)
  Eigen::Matrix<S, 4, 1> dual;
};

template <typename S>
DualQuat<S> toDualQuat(const RigidTransform<S>& transform);

template <typename S>
RigidTransform<S> fromDualQuat(const DualQuat<S>& dq);

/// Dual-quaternion blend of bone transforms, sign-aligned to the heaviest bone.
/// Throws NumericalError when the blended rotation part cancels.
template <typename S>
RigidTransform<S> blendTransforms(
    const std::vector<RigidTransform<S>>& bones,
    const SkinWeights& weights,
    const std::string& label);

struct NodeTransforms {
  std::vector<Rigid> transforms; // (R_sk,k, t_sk,k)
};

NodeTransforms nodeTransforms(const CharacterRig& rig, const Eigen::VectorXd& theta, const Vec3& alpha);

/// Node transforms with derivatives: d/dq of R_k and t_k for q in [theta, alpha].
struct NodeTransformJacobian {
  NodeTransforms value;
  std::vector<std::vector<Mat3>> dRotation; // [node][param]
  std::vector<std::vector<Vec3>> dTranslation; // [node][param]
};

NodeTransformJacobian nodeTransformsJacobian(const CharacterRig& rig, const Eigen::VectorXd& theta, const Vec3& alpha);

/// Dual-quaternion skinning of the template through the graph: DQS node
/// transforms blended with the vertex-node weights.
Points skinVertices(const CharacterRig& rig, const Eigen::VectorXd& theta, const Vec3& alpha);

} // namespace hcap
