#pragma once

#include "hcap/assets.hpp"
#include "hcap/common.hpp"
#include "hcap/kinematics.hpp"

#include <Eigen/Core>

namespace hcap {

struct GraphParams {
  Points A; // per-node XYZ Euler angles
  Points T; // per-node translations

  static GraphParams zero(int nodes) {
    return {Points(nodes, Vec3::Zero()), Points(nodes, Vec3::Zero())};
  }
  int nodeCount() const {
    return static_cast<int>(A.size());
  }
};

struct MeshState {
  Points Y; // deformed, rest pose
  Points cam; // posed, camera-root-relative
  Points world;
};

/// Embedded deformation of the template: Y_i = sum_k w_ik (R(A_k)(V_i - G_k) + G_k + T_k).
Points deform(const CharacterRig& rig, const GraphParams& params);

/// Skeletal posing of deformed vertices by blending node transforms.
Points poseVertices(const CharacterRig& rig, const Points& Y, const NodeTransforms& nodes);

/// World-space mesh; identical to toWorld applied per vertex.
Points toWorldMesh(const Points& cam, const Mat3& inputRotation, const Vec3& t);

MeshState evaluateMesh(const CharacterRig& rig, const GraphParams& params, const NodeTransforms& nodes, const Mat3& inputRotation, const Vec3& t);

/// Landmarks carried by their bound node: deformed with weight 1, posed with that
/// node's transform, then moved to world space.
Points deformLandmarks(const CharacterRig& rig, const GraphParams& params, const NodeTransforms& nodes, const Mat3& inputRotation, const Vec3& t);

/// Per-vertex world affine map Y_i -> V_i for a fixed pose:
/// V_i = Rᵀ (sum_k w_ik R_sk,k) Y_i + Rᵀ (sum_k w_ik t_sk,k) + t.
struct PosedBlend {
  std::vector<Mat3> linear;
  Points offset;
  std::vector<Mat3> landmarkLinear;
  Points landmarkOffset;

  Points apply(const Points& Y) const;
};

PosedBlend blendForPose(const CharacterRig& rig, const NodeTransforms& nodes, const Mat3& inputRotation, const Vec3& t);

/// Landmark positions in the deformed rest pose (before posing).
Points deformLandmarksRest(const CharacterRig& rig, const GraphParams& params);

/// Vector-Jacobian product through the deformation: given dL/dY for vertices and
/// dL/dY for landmarks (rest pose), accumulates dL/dA and dL/dT.
void deformVjp(
    const CharacterRig& rig,
    const GraphParams& params,
    const Points& gradY,
    const Points& gradLandmarkY,
    Points& gradA,
    Points& gradT);

/// Vector-Jacobian product of the world mesh w.r.t. (theta, alpha) for fixed Y
/// and t: returns dL/d[theta, alpha] given dL/dV_world.
Eigen::VectorXd poseVjp(
    const CharacterRig& rig,
    const Points& Y,
    const NodeTransformJacobian& nodes,
    const Mat3& inputRotation,
    const Points& gradWorld);

} // namespace hcap
