#include "hcap/kinematics.hpp"

#include <cmath>

namespace hcap {

namespace {

inline double valueOf(double x) {
  return x;
}

inline double valueOf(const PoseDual& x) {
  return x.value();
}

template <typename S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Mat3T = Eigen::Matrix<S, 3, 3>;
template <typename S>
using Quat4 = Eigen::Matrix<S, 4, 1>;

template <typename S>
Quat4<S> quatMultiply(const Quat4<S>& a, const Quat4<S>& b) {
  Quat4<S> r;
  r[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
  r[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
  r[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
  r[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
  return r;
}

template <typename S>
Quat4<S> quatConjugate(const Quat4<S>& q) {
  return Quat4<S>(q[0], -q[1], -q[2], -q[3]);
}

// Shepperd's method; the sign of the result may differ between branches,
// which the blend handles through hemisphere alignment.
template <typename S>
Quat4<S> quatFromMatrix(const Mat3T<S>& m) {
  using std::sqrt;
  Quat4<S> q;
  const S trace = m(0, 0) + m(1, 1) + m(2, 2);
  if (valueOf(trace) > 0.0) {
    const S s = sqrt(trace + S(1.0)) * S(2.0);
    q << S(0.25) * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s, (m(1, 0) - m(0, 1)) / s;
  } else if (valueOf(m(0, 0)) > valueOf(m(1, 1)) && valueOf(m(0, 0)) > valueOf(m(2, 2))) {
    const S s = sqrt(S(1.0) + m(0, 0) - m(1, 1) - m(2, 2)) * S(2.0);
    q << (m(2, 1) - m(1, 2)) / s, S(0.25) * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s;
  } else if (valueOf(m(1, 1)) > valueOf(m(2, 2))) {
    const S s = sqrt(S(1.0) + m(1, 1) - m(0, 0) - m(2, 2)) * S(2.0);
    q << (m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, S(0.25) * s, (m(1, 2) + m(2, 1)) / s;
  } else {
    const S s = sqrt(S(1.0) + m(2, 2) - m(0, 0) - m(1, 1)) * S(2.0);
    q << (m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, S(0.25) * s;
  }
  return q;
}

template <typename S>
Mat3T<S> matrixFromQuat(const Quat4<S>& q) {
  const S w = q[0], x = q[1], y = q[2], z = q[3];
  const S one(1.0), two(2.0);
  Mat3T<S> r;
  r << one - two * (y * y + z * z), two * (x * y - w * z), two * (x * z + w * y), //
      two * (x * y + w * z), one - two * (x * x + z * z), two * (y * z - w * x), //
      two * (x * z - w * y), two * (y * z + w * x), one - two * (x * x + y * y);
  return r;
}

} // namespace

template <typename S>
std::vector<RigidTransform<S>> jointFrames(
    const Skeleton& skeleton,
    const Eigen::Matrix<S, Eigen::Dynamic, 1>& theta,
    const Eigen::Matrix<S, 3, 1>& alpha) {
  if (theta.size() != skeleton.dofCount()) {
    throw DataError(
        "theta has " + std::to_string(theta.size()) + " entries, skeleton has " +
        std::to_string(skeleton.dofCount()) + " DoF");
  }
  std::vector<RigidTransform<S>> frames(skeleton.joints.size());
  int dof = 0;
  for (size_t j = 0; j < skeleton.joints.size(); ++j) {
    const auto& joint = skeleton.joints[j];
    Mat3T<S> local = Mat3T<S>::Identity();
    for (const auto axis : joint.axes) {
      local = local * axisRotation<S>(static_cast<int>(axis), theta[dof++]);
    }
    if (joint.parent < 0) {
      frames[j].rotation = eulerXYZ<S>(alpha) * local;
      frames[j].translation = Vec3T<S>::Zero();
    } else {
      const auto& parent = frames[joint.parent];
      frames[j].rotation = parent.rotation * local;
      frames[j].translation = parent.translation + parent.rotation * joint.offset.cast<S>();
    }
  }
  return frames;
}

template <typename S>
std::vector<RigidTransform<S>> boneTransforms(
    const Skeleton& skeleton,
    const Eigen::Matrix<S, Eigen::Dynamic, 1>& theta,
    const Eigen::Matrix<S, 3, 1>& alpha) {
  auto frames = jointFrames<S>(skeleton, theta, alpha);
  const auto rest = skeleton.restJointPositions();
  for (size_t j = 0; j < frames.size(); ++j) {
    frames[j].translation -= frames[j].rotation * rest[j].cast<S>();
  }
  return frames;
}

Points forwardLandmarks(const Skeleton& skeleton, const Eigen::VectorXd& theta, const Vec3& alpha) {
  const auto frames = jointFrames<double>(skeleton, theta, alpha);
  Points out;
  out.reserve(skeleton.landmarks.size());
  for (const auto& l : skeleton.landmarks) {
    out.push_back(frames[l.joint].apply(l.offset));
  }
  return out;
}

namespace {

struct DualParams {
  Eigen::Matrix<PoseDual, Eigen::Dynamic, 1> theta;
  Eigen::Matrix<PoseDual, 3, 1> alpha;
};

DualParams seedDuals(const Eigen::VectorXd& theta, const Vec3& alpha) {
  const int n = static_cast<int>(theta.size()) + 3;
  DualParams d;
  d.theta.resize(theta.size());
  for (int i = 0; i < theta.size(); ++i) {
    d.theta[i] = PoseDual(theta[i], n, i);
  }
  for (int i = 0; i < 3; ++i) {
    d.alpha[i] = PoseDual(alpha[i], n, static_cast<int>(theta.size()) + i);
  }
  return d;
}

Eigen::VectorXd derivativesOf(const PoseDual& x, int n) {
  if (x.derivatives().size() == 0) {
    return Eigen::VectorXd::Zero(n);
  }
  return x.derivatives();
}

} // namespace

LandmarkJacobian forwardLandmarksJacobian(const Skeleton& skeleton, const Eigen::VectorXd& theta, const Vec3& alpha) {
  const auto duals = seedDuals(theta, alpha);
  const int n = static_cast<int>(theta.size()) + 3;
  const auto frames = jointFrames<PoseDual>(skeleton, duals.theta, duals.alpha);
  LandmarkJacobian out;
  out.jacobian.resize(3 * skeleton.landmarkCount(), n);
  for (int m = 0; m < skeleton.landmarkCount(); ++m) {
    const auto& l = skeleton.landmarks[m];
    const Eigen::Matrix<PoseDual, 3, 1> p = frames[l.joint].apply(l.offset.cast<PoseDual>());
    Vec3 value;
    for (int c = 0; c < 3; ++c) {
      value[c] = p[c].value();
      out.jacobian.row(3 * m + c) = derivativesOf(p[c], n).transpose();
    }
    out.positions.push_back(value);
  }
  return out;
}

Points toWorld(const Points& cameraRelative, const Mat3& inputRotation, const Vec3& t) {
  Points out;
  out.reserve(cameraRelative.size());
  const Mat3 rt = inputRotation.transpose();
  for (const auto& p : cameraRelative) {
    out.push_back(rt * p + t);
  }
  return out;
}

// --- dual quaternions -------------------------------------------------------

template <typename S>
DualQuat<S> toDualQuat(const RigidTransform<S>& transform) {
  DualQuat<S> dq;
  dq.real = quatFromMatrix<S>(transform.rotation);
  const Quat4<S> t(S(0.0), transform.translation[0], transform.translation[1], transform.translation[2]);
  dq.dual = S(0.5) * quatMultiply<S>(t, dq.real);
  return dq;
}

template <typename S>
RigidTransform<S> fromDualQuat(const DualQuat<S>& dq) {
  RigidTransform<S> out;
  out.rotation = matrixFromQuat<S>(dq.real);
  const Quat4<S> t = S(2.0) * quatMultiply<S>(dq.dual, quatConjugate<S>(dq.real));
  out.translation = t.template tail<3>();
  return out;
}

template <typename S>
RigidTransform<S> blendTransforms(
    const std::vector<RigidTransform<S>>& bones,
    const SkinWeights& weights,
    const std::string& label) {
  using std::sqrt;
  if (weights.empty()) {
    throw NumericalError("no skinning influences for " + label);
  }
  size_t pivot = 0;
  for (size_t i = 1; i < weights.size(); ++i) {
    if (weights[i].weight > weights[pivot].weight) {
      pivot = i;
    }
  }
  const DualQuat<S> reference = toDualQuat<S>(bones[weights[pivot].bone]);
  DualQuat<S> sum{Quat4<S>::Zero(), Quat4<S>::Zero()};
  for (size_t i = 0; i < weights.size(); ++i) {
    const DualQuat<S> dq = i == pivot ? reference : toDualQuat<S>(bones[weights[i].bone]);
    const double sign = valueOf(dq.real.dot(reference.real)) < 0.0 ? -1.0 : 1.0;
    const S w(sign * weights[i].weight);
    sum.real += w * dq.real;
    sum.dual += w * dq.dual;
  }
  const S norm = sqrt(sum.real.squaredNorm());
  if (valueOf(norm) < 1e-12) {
    throw NumericalError("zero-norm dual quaternion blend at " + label);
  }
  sum.real /= norm;
  sum.dual /= norm;
  return fromDualQuat<S>(sum);
}

NodeTransforms nodeTransforms(const CharacterRig& rig, const Eigen::VectorXd& theta, const Vec3& alpha) {
  const auto bones = boneTransforms<double>(rig.skeleton, theta, alpha);
  NodeTransforms out;
  out.transforms.reserve(rig.graph.nodeCount());
  for (int k = 0; k < rig.graph.nodeCount(); ++k) {
    out.transforms.push_back(blendTransforms<double>(bones, rig.graph.nodeSkinning[k], "node " + std::to_string(k)));
  }
  return out;
}

NodeTransformJacobian nodeTransformsJacobian(const CharacterRig& rig, const Eigen::VectorXd& theta, const Vec3& alpha) {
  const auto duals = seedDuals(theta, alpha);
  const int n = static_cast<int>(theta.size()) + 3;
  const auto bones = boneTransforms<PoseDual>(rig.skeleton, duals.theta, duals.alpha);
  NodeTransformJacobian out;
  const int k = rig.graph.nodeCount();
  out.dRotation.assign(k, std::vector<Mat3>(n, Mat3::Zero()));
  out.dTranslation.assign(k, std::vector<Vec3>(n, Vec3::Zero()));
  for (int node = 0; node < k; ++node) {
    const auto blended = blendTransforms<PoseDual>(bones, rig.graph.nodeSkinning[node], "node " + std::to_string(node));
    Rigid value;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        value.rotation(r, c) = blended.rotation(r, c).value();
        const auto d = derivativesOf(blended.rotation(r, c), n);
        for (int q = 0; q < n; ++q) {
          out.dRotation[node][q](r, c) = d[q];
        }
      }
      value.translation[r] = blended.translation[r].value();
      const auto d = derivativesOf(blended.translation[r], n);
      for (int q = 0; q < n; ++q) {
        out.dTranslation[node][q][r] = d[q];
      }
    }
    out.value.transforms.push_back(value);
  }
  return out;
}

Points skinVertices(const CharacterRig& rig, const Eigen::VectorXd& theta, const Vec3& alpha) {
  const auto nodes = nodeTransforms(rig, theta, alpha);
  Points out(rig.mesh.vertexCount(), Vec3::Zero());
  for (int i = 0; i < rig.mesh.vertexCount(); ++i) {
    for (const auto& inf : rig.graph.vertexInfluences[i]) {
      out[i] += inf.weight * nodes.transforms[inf.node].apply(rig.mesh.vertices[i]);
    }
  }
  return out;
}

#define HCAP_INSTANTIATE_KINEMATICS(S)                                                                                   \
  template std::vector<RigidTransform<S>> jointFrames<S>(                                                              \
      const Skeleton&, const Eigen::Matrix<S, Eigen::Dynamic, 1>&, const Eigen::Matrix<S, 3, 1>&);                     \
  template std::vector<RigidTransform<S>> boneTransforms<S>(                                                           \
      const Skeleton&, const Eigen::Matrix<S, Eigen::Dynamic, 1>&, const Eigen::Matrix<S, 3, 1>&);                     \
  template DualQuat<S> toDualQuat<S>(const RigidTransform<S>&);                                                        \
  template RigidTransform<S> fromDualQuat<S>(const DualQuat<S>&);                                                      \
  template RigidTransform<S> blendTransforms<S>(const std::vector<RigidTransform<S>>&, const SkinWeights&, const std::string&);

HCAP_INSTANTIATE_KINEMATICS(double)
HCAP_INSTANTIATE_KINEMATICS(PoseDual)

#undef HCAP_INSTANTIATE_KINEMATICS

} // namespace hcap
