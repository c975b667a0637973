#include "hcap/graphdeform.hpp"

#include <array>
#include <stdexcept>

namespace hcap {

namespace {

void checkParams(const CharacterRig& rig, const GraphParams& params) {
  if (params.nodeCount() != rig.graph.nodeCount() || params.T.size() != params.A.size()) {
    throw std::invalid_argument(
        "graph parameters have " + std::to_string(params.A.size()) + " nodes, graph has " + std::to_string(rig.graph.nodeCount()));
  }
}

} // namespace

Points deform(const CharacterRig& rig, const GraphParams& params) {
  checkParams(rig, params);
  const auto& g = rig.graph;
  std::vector<Mat3> rot(g.nodeCount());
  for (int k = 0; k < g.nodeCount(); ++k) {
    rot[k] = eulerXYZ(params.A[k]);
  }
  Points Y(rig.mesh.vertexCount(), Vec3::Zero());
  for (int i = 0; i < rig.mesh.vertexCount(); ++i) {
    const Vec3& v = rig.mesh.vertices[i];
    for (const auto& inf : g.vertexInfluences[i]) {
      const int k = inf.node;
      Y[i] += inf.weight * (rot[k] * (v - g.nodes[k]) + g.nodes[k] + params.T[k]);
    }
  }
  return Y;
}

Points poseVertices(const CharacterRig& rig, const Points& Y, const NodeTransforms& nodes) {
  Points out(Y.size(), Vec3::Zero());
  for (size_t i = 0; i < Y.size(); ++i) {
    for (const auto& inf : rig.graph.vertexInfluences[i]) {
      out[i] += inf.weight * nodes.transforms[inf.node].apply(Y[i]);
    }
  }
  return out;
}

Points toWorldMesh(const Points& cam, const Mat3& inputRotation, const Vec3& t) {
  return toWorld(cam, inputRotation, t);
}

MeshState evaluateMesh(const CharacterRig& rig, const GraphParams& params, const NodeTransforms& nodes, const Mat3& inputRotation, const Vec3& t) {
  MeshState s;
  s.Y = deform(rig, params);
  s.cam = poseVertices(rig, s.Y, nodes);
  s.world = toWorldMesh(s.cam, inputRotation, t);
  return s;
}

Points deformLandmarksRest(const CharacterRig& rig, const GraphParams& params) {
  checkParams(rig, params);
  const auto& g = rig.graph;
  Points out;
  out.reserve(g.landmarkNode.size());
  for (size_t m = 0; m < g.landmarkNode.size(); ++m) {
    const int k = g.landmarkNode[m];
    out.push_back(eulerXYZ(params.A[k]) * (g.landmarkRest[m] - g.nodes[k]) + g.nodes[k] + params.T[k]);
  }
  return out;
}

Points deformLandmarks(const CharacterRig& rig, const GraphParams& params, const NodeTransforms& nodes, const Mat3& inputRotation, const Vec3& t) {
  const Points rest = deformLandmarksRest(rig, params);
  Points out;
  out.reserve(rest.size());
  for (size_t m = 0; m < rest.size(); ++m) {
    out.push_back(inputRotation.transpose() * nodes.transforms[rig.graph.landmarkNode[m]].apply(rest[m]) + t);
  }
  return out;
}

Points PosedBlend::apply(const Points& Y) const {
  Points out(Y.size());
  for (size_t i = 0; i < Y.size(); ++i) {
    out[i] = linear[i] * Y[i] + offset[i];
  }
  return out;
}

PosedBlend blendForPose(const CharacterRig& rig, const NodeTransforms& nodes, const Mat3& inputRotation, const Vec3& t) {
  PosedBlend b;
  const Mat3 rt = inputRotation.transpose();
  const int n = rig.mesh.vertexCount();
  b.linear.resize(n);
  b.offset.resize(n);
  for (int i = 0; i < n; ++i) {
    Mat3 m = Mat3::Zero();
    Vec3 o = Vec3::Zero();
    for (const auto& inf : rig.graph.vertexInfluences[i]) {
      m += inf.weight * nodes.transforms[inf.node].rotation;
      o += inf.weight * nodes.transforms[inf.node].translation;
    }
    b.linear[i] = rt * m;
    b.offset[i] = rt * o + t;
  }
  for (int k : rig.graph.landmarkNode) {
    b.landmarkLinear.push_back(rt * nodes.transforms[k].rotation);
    b.landmarkOffset.push_back(rt * nodes.transforms[k].translation + t);
  }
  return b;
}

void deformVjp(
    const CharacterRig& rig,
    const GraphParams& params,
    const Points& gradY,
    const Points& gradLandmarkY,
    Points& gradA,
    Points& gradT) {
  checkParams(rig, params);
  const auto& g = rig.graph;
  const int K = g.nodeCount();
  gradA.assign(K, Vec3::Zero());
  gradT.assign(K, Vec3::Zero());
  std::vector<std::array<Mat3, 3>> dR(K);
  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < 3; ++c) {
      dR[k][c] = eulerXYZDerivative(params.A[k], c);
    }
  }
  auto accumulate = [&](int k, double w, const Vec3& rest, const Vec3& gy) {
    const Vec3 local = rest - g.nodes[k];
    gradT[k] += w * gy;
    for (int c = 0; c < 3; ++c) {
      gradA[k][c] += w * gy.dot(dR[k][c] * local);
    }
  };
  for (size_t i = 0; i < gradY.size(); ++i) {
    for (const auto& inf : g.vertexInfluences[i]) {
      accumulate(inf.node, inf.weight, rig.mesh.vertices[i], gradY[i]);
    }
  }
  for (size_t m = 0; m < gradLandmarkY.size(); ++m) {
    accumulate(g.landmarkNode[m], 1.0, g.landmarkRest[m], gradLandmarkY[m]);
  }
}

Eigen::VectorXd poseVjp(
    const CharacterRig& rig,
    const Points& Y,
    const NodeTransformJacobian& nodes,
    const Mat3& inputRotation,
    const Points& gradWorld) {
  const int K = rig.graph.nodeCount();
  const int n = nodes.dRotation.empty() ? 0 : static_cast<int>(nodes.dRotation[0].size());
  // Per node: dL/dR_k = sum_i w_ik gcam_i Y_iᵀ, dL/dt_k = sum_i w_ik gcam_i.
  std::vector<Mat3> gR(K, Mat3::Zero());
  Points gt(K, Vec3::Zero());
  for (size_t i = 0; i < Y.size(); ++i) {
    const Vec3 gcam = inputRotation * gradWorld[i];
    for (const auto& inf : rig.graph.vertexInfluences[i]) {
      gR[inf.node] += inf.weight * gcam * Y[i].transpose();
      gt[inf.node] += inf.weight * gcam;
    }
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < K; ++k) {
    for (int q = 0; q < n; ++q) {
      out[q] += gR[k].cwiseProduct(nodes.dRotation[k][q]).sum() + gt[k].dot(nodes.dTranslation[k][q]);
    }
  }
  return out;
}

} // namespace hcap
