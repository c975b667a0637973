#pragma once

#include "hcap/graphdeform.hpp"
#include "hcap/kinematics.hpp"
#include "hcap/losses.hpp"

#include <string>
#include <vector>

namespace hcap {

struct StageConfig {
  int iterations = 300;
  double learningRate = 1e-2;
  double finalDecay = 0.01; // learning rate at the last iteration, relative
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct FitConfig {
  StageConfig pose{1000, 5e-2, 0.03};
  StageConfig deform{300, 1e-3, 0.1};
  AdamConfig adam;
  bool warmStart = true;
  bool deformStage = true;
  int smoothingKernel = 5;
  double smoothingSigma = 1.0;
  bool weightedAlignment = true;
  LossWeights weights;

  void validate() const;
};

/// Adam over the active entries of every parameter block.
class Adam {
 public:
  explicit Adam(const AdamConfig& config) : config_(config) {}
  void step(ParamBlocks& params, const BlockGradients& grad, double learningRate);

 private:
  AdamConfig config_;
  std::map<std::string, Eigen::VectorXd> m_;
  std::map<std::string, Eigen::VectorXd> v_;
  int t_ = 0;
};

struct TraceRow {
  std::string stage;
  int iteration = 0;
  double total = 0.0;
  std::vector<double> components;
};

struct PoseFit {
  PoseParams pose;
  Points landmarks; // world
  double loss = 0.0;
  double initialLoss = 0.0;
  std::vector<TraceRow> trace;
};

struct DeformFit {
  GraphParams graph;
  double loss = 0.0;
  double initialLoss = 0.0;
  bool silhouetteEmpty = false;
  std::vector<TraceRow> trace;
};

/// Stage A: Adam on the pose objective with t solved in closed form at every
/// iterate. Returns the best iterate under the final (all-ones) landmark weights.
PoseFit fitPose(std::shared_ptr<const FrameProblem> problem, const FitConfig& config, const PoseParams& init);

/// Stage B: Adam on the deformation objective with the pose frozen; boundary
/// sets and gates are reselected at every iterate.
DeformFit fitDeform(
    std::shared_ptr<const FrameProblem> problem,
    const PoseParams& pose,
    const FitConfig& config,
    const GraphParams& init,
    int jobs = 1);

/// Gaussian temporal smoothing of per-frame vertex arrays; the kernel is
/// truncated at the sequence ends and renormalized.
std::vector<Points> smoothSequence(const std::vector<Points>& frames, int kernelSize, double sigma);

/// Normalized kernel weights used for frame `frame` of a `count`-frame sequence,
/// indexed from the first frame in the window.
std::vector<double> smoothingWeights(int frame, int count, int kernelSize, double sigma, int* first = nullptr);

struct FrameResult {
  int frame = 0;
  PoseParams pose;
  GraphParams graph;
  MeshState mesh;
  Points smoothed; // world vertices after temporal smoothing
  Points landmarks; // world skeleton landmarks
  double poseLoss = 0.0;
  double deformLoss = 0.0;
  std::vector<TraceRow> trace;
  bool failed = false;
  std::string error;
};

struct SequenceInput {
  const CharacterRig* rig = nullptr;
  std::vector<Camera> cameras;
  std::vector<int> views;
  int inputCamera = 0;
  std::vector<int> frameIds;
  std::vector<FrameObservations> frames;
};

/// Fits every frame (pose, then deformation), warm-starting from the previous
/// frame unless disabled, in which case frames are fitted in parallel with
/// `jobs` threads. A failing frame is recorded and the next frame starts from
/// the rest pose.
std::vector<FrameResult> fitSequence(const SequenceInput& input, const FitConfig& config, int jobs = 1);

/// Fits one frame from the given initialization.
FrameResult fitFrame(const SequenceInput& input, size_t index, const FitConfig& config, const PoseParams& initPose, const GraphParams& initGraph, int jobs);

} // namespace hcap
