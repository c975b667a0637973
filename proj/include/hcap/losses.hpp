#pragma once

#include "hcap/align.hpp"
#include "hcap/assets.hpp"
#include "hcap/camproj.hpp"
#include "hcap/grad.hpp"
#include "hcap/graphdeform.hpp"
#include "hcap/kinematics.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace hcap {

struct Keypoint2D {
  Vec2 p = Vec2::Zero();
  double sigma = 0.0;
};

constexpr double kConfidenceThreshold = 0.4;

/// Confidences below the detection threshold are treated as missing.
inline double gateConfidence(double sigma) {
  return sigma < kConfidenceThreshold ? 0.0 : sigma;
}

using Detections = std::vector<std::vector<Keypoint2D>>; // [camera][landmark]

struct FrameObservations {
  Detections keypoints;
  std::vector<SilhouetteObservation> silhouettes; // [camera]
};

struct LossWeights {
  double keypoint = 1.0;
  double limit = 0.1;
  double silhouette = 1.0;
  double keypointGraph = 0.5;
  double arap = 400.0;
  double lambdaLow = 0.1; // hierarchical weight of landmarks not yet released
};

/// 1 for landmarks whose chain depth is at most 1 + ceil(fraction * maxDepth), `low` otherwise.
std::vector<double> hierarchicalLambdas(const Skeleton& skeleton, double fraction, double low = 0.1);

/// Rays from the detections of the given views (sigma = 0 entries dropped).
RayBundle buildRays(const std::vector<Camera>& cameras, const std::vector<int>& views, const Detections& detections);

/// sum_c sum_m lambda_m sigma_cm |pi_c(P_m) - p_cm|^2. Landmarks behind a camera are
/// skipped and counted. `grad` receives dL/dP_m when non-null.
double keypointLoss(
    const Points& world,
    const std::vector<Camera>& cameras,
    const std::vector<int>& views,
    const Detections& detections,
    const std::vector<double>& lambdas,
    Points* grad = nullptr,
    int* behind = nullptr);

double limitLoss(const Eigen::VectorXd& theta, const std::vector<DofLimit>& limits, Eigen::VectorXd* grad = nullptr);

constexpr double kArapEpsilon = 1e-6;

/// Smoothed L1: sqrt(x^2 + eps^2) - eps.
inline double smoothAbs(double x) {
  return std::sqrt(x * x + kArapEpsilon * kArapEpsilon) - kArapEpsilon;
}

double arapLoss(const DeformGraph& graph, const GraphParams& params, Points* gradA = nullptr, Points* gradT = nullptr);

/// One frozen silhouette term: the boundary vertex, its view and sampling cell.
struct SilhouetteSample {
  int view = 0;
  int vertex = 0;
  BilinearCell cell;
};

struct SilhouetteSelection {
  std::vector<SilhouetteSample> samples; // only terms with rho = 1
  int boundaryCount = 0; // |B_c| summed over views
  bool empty() const {
    return boundaryCount == 0;
  }
};

/// Boundary sets and directional gates for the current mesh. A boundary vertex
/// is kept when moving it along -grad(D) points the same way as its outward
/// normal requires: outward-facing gradient outside the mask, inward inside.
SilhouetteSelection selectSilhouette(
    const std::vector<Camera>& cameras,
    const std::vector<int>& views,
    const std::vector<SilhouetteObservation>& silhouettes,
    const Points& world,
    const std::vector<Eigen::Vector3i>& faces,
    const std::vector<MeshEdge>& edges,
    int jobs = 1);

double silhouetteLoss(
    const SilhouetteSelection& selection,
    const std::vector<Camera>& cameras,
    const std::vector<SilhouetteObservation>& silhouettes,
    const Points& world,
    Points* grad = nullptr);

// --- parameter layout --------------------------------------------------------

ParamBlocks poseBlocks(const Eigen::VectorXd& theta, const Vec3& alpha);
ParamBlocks graphBlocks(const GraphParams& params);
GraphParams graphFromBlocks(const ParamBlocks& blocks);
Eigen::VectorXd flatten(const Points& points);
Points unflatten(const Eigen::VectorXd& v);

/// Shared pieces of one frame's fitting problem.
struct FrameProblem {
  const CharacterRig* rig = nullptr;
  std::vector<Camera> cameras;
  std::vector<int> views; // supervising cameras
  int inputCamera = 0;
  FrameObservations observations;
  bool weightedAlignment = true;
  int jobs = 1; // threads for per-camera work

  const Mat3& inputRotation() const {
    return cameras[inputCamera].R;
  }
};

// --- stage A terms -------------------------------------------------------------

class KeypointObjective : public Objective {
 public:
  explicit KeypointObjective(std::shared_ptr<const FrameProblem> problem);
  std::vector<std::string> blockNames() const override {
    return {"theta", "alpha"};
  }
  double evaluate(const ParamBlocks& params, BlockGradients* grad) const override;
  std::string name() const override {
    return "keypoint";
  }
  void setLambdas(std::vector<double> lambdas) {
    lambdas_ = std::move(lambdas);
  }
  /// World landmarks and solved translation for a pose.
  Points worldLandmarks(const Eigen::VectorXd& theta, const Vec3& alpha, Vec3* t = nullptr) const;
  int lastBehindCount() const {
    return behind_;
  }

 private:
  std::shared_ptr<const FrameProblem> problem_;
  std::shared_ptr<TranslationSolver> solver_;
  std::vector<double> lambdas_;
  mutable int behind_ = 0;
};

class LimitObjective : public Objective {
 public:
  explicit LimitObjective(const Skeleton& skeleton) : limits_(skeleton.limits) {}
  std::vector<std::string> blockNames() const override {
    return {"theta"};
  }
  double evaluate(const ParamBlocks& params, BlockGradients* grad) const override;
  std::string name() const override {
    return "limit";
  }

 private:
  std::vector<DofLimit> limits_;
};

// --- stage B terms -------------------------------------------------------------

/// Fixed pose for the deformation stage.
struct FrozenPose {
  Eigen::VectorXd theta;
  Vec3 alpha = Vec3::Zero();
  Vec3 t = Vec3::Zero();
  NodeTransforms nodes;
  PosedBlend blend;
};

FrozenPose freezePose(const CharacterRig& rig, const Eigen::VectorXd& theta, const Vec3& alpha, const Vec3& t, const Mat3& inputRotation);

class SilhouetteObjective : public Objective {
 public:
  SilhouetteObjective(std::shared_ptr<const FrameProblem> problem, std::shared_ptr<const FrozenPose> pose);
  std::vector<std::string> blockNames() const override {
    return {"A", "T"};
  }
  void freeze(const ParamBlocks& params) override;
  double evaluate(const ParamBlocks& params, BlockGradients* grad) const override;
  std::string name() const override {
    return "silhouette";
  }
  const SilhouetteSelection& selection() const {
    return selection_;
  }

 private:
  std::shared_ptr<const FrameProblem> problem_;
  std::shared_ptr<const FrozenPose> pose_;
  SilhouetteSelection selection_;
};

class KeypointGraphObjective : public Objective {
 public:
  KeypointGraphObjective(std::shared_ptr<const FrameProblem> problem, std::shared_ptr<const FrozenPose> pose);
  std::vector<std::string> blockNames() const override {
    return {"A", "T"};
  }
  double evaluate(const ParamBlocks& params, BlockGradients* grad) const override;
  std::string name() const override {
    return "keypoint_graph";
  }

 private:
  std::shared_ptr<const FrameProblem> problem_;
  std::shared_ptr<const FrozenPose> pose_;
};

class ArapObjective : public Objective {
 public:
  explicit ArapObjective(const DeformGraph& graph) : graph_(&graph) {}
  std::vector<std::string> blockNames() const override {
    return {"A", "T"};
  }
  double evaluate(const ParamBlocks& params, BlockGradients* grad) const override;
  std::string name() const override {
    return "arap";
  }

 private:
  const DeformGraph* graph_;
};

struct PoseStage {
  std::shared_ptr<WeightedSum> objective;
  std::shared_ptr<KeypointObjective> keypoint;
};

PoseStage makePoseObjective(std::shared_ptr<const FrameProblem> problem, const LossWeights& weights);

struct DeformStage {
  std::shared_ptr<WeightedSum> objective;
  std::shared_ptr<SilhouetteObjective> silhouette;
};

DeformStage makeDeformObjective(std::shared_ptr<const FrameProblem> problem, std::shared_ptr<const FrozenPose> pose, const LossWeights& weights);

} // namespace hcap
