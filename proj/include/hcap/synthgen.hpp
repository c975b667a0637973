#pragma once

#include "hcap/assets.hpp"
#include "hcap/camproj.hpp"
#include "hcap/graphdeform.hpp"
#include "hcap/kinematics.hpp"
#include "hcap/losses.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hcap {

/// Scripted ground-truth deformation of a set of graph nodes.
struct DeformationScript {
  std::vector<int> nodes; // explicit node indices
  std::string anchor; // or: the node a landmark is bound to
  Vec3 translation = Vec3::Zero(); // T per node at full strength (rest frame, m)
  Vec3 rotation = Vec3::Zero(); // A per node at full strength (rad)
  std::string profile = "constant"; // constant | ramp | sine
  double period = 40.0; // frames, for the sine profile

  double strength(int frame, int frames) const;
};

struct SynthConfig {
  std::uint64_t seed = 1;
  int cameras = 7;
  double ringRadius = 3.5;
  double heightJitter = 0.3;
  double targetHeight = 0.9;
  int width = 320;
  int height = 320;
  double focal = 460.0;
  int frames = 20;
  double amplitudeMin = 0.05; // rad
  double amplitudeMax = 0.35;
  double periodMin = 30.0; // frames
  double periodMax = 80.0;
  Vec3 rootPosition{0.0, 1.0, 0.0}; // world, pelvis
  Vec3 drift{0.15, 0.0, 0.1}; // amplitude of the slow translation drift (m)
  double driftPeriod = 60.0;
  double noisePx = 0.0;
  double dropout = 0.0; // probability that a keypoint's confidence is zeroed
  std::vector<DeformationScript> deformations;

  void validate() const;
};

struct FrameGroundTruth {
  PoseParams pose;
  GraphParams graph;
  Points landmarks; // world skeleton landmarks
};

/// Evaluation layout carried by a dataset (landmark names and the metric tree).
struct DatasetMeta {
  int frames = 0;
  int inputCamera = 0;
  std::vector<std::string> landmarks;
  EvalLayout eval;
};

struct Dataset {
  std::vector<Camera> cameras;
  DatasetMeta meta;
  std::vector<int> frameIds;
  std::vector<FrameObservations> frames;
  std::vector<FrameGroundTruth> truth; // empty when not loaded
};

/// Ring of cameras looking at the subject; camera 0 sits level with the target.
std::vector<Camera> ringCameras(const SynthConfig& config, std::uint64_t seed);

/// Resolves the node set of every deformation script.
std::vector<int> scriptNodes(const CharacterRig& rig, const DeformationScript& script);

/// Ground-truth parameters for one frame (deterministic in seed and frame).
FrameGroundTruth groundTruthFrame(const CharacterRig& rig, const SynthConfig& config, const std::vector<Camera>& cameras, int frame);

/// Renders observations of a ground-truth frame: keypoints (with noise and
/// dropout drawn from `rng`), masks and distance transforms.
FrameObservations renderObservations(
    const CharacterRig& rig,
    const std::vector<Camera>& cameras,
    int inputCamera,
    const FrameGroundTruth& truth,
    double noisePx,
    double dropout,
    std::uint64_t seed);

/// Whole synthetic sequence in memory.
Dataset generate(const CharacterRig& rig, const SynthConfig& config);

/// Distance images pass through float32 on disk; in-memory datasets use the
/// same rounding so both paths see identical observations.
Image<double> roundToFloat(const Image<double>& image);

// --- files -------------------------------------------------------------------

/// "key count v1 v2 ..." lines with full double precision.
using ParamFile = std::map<std::string, Eigen::VectorXd>;

void writeParamFile(const std::filesystem::path& path, const std::vector<std::pair<std::string, Eigen::VectorXd>>& entries);
ParamFile readParamFile(const std::filesystem::path& path);

std::vector<std::pair<std::string, Eigen::VectorXd>> frameParamEntries(const PoseParams& pose, const GraphParams& graph, const Points& landmarks);
FrameGroundTruth frameFromParams(const ParamFile& file);

std::string frameName(int frame); // zero-padded, four digits

void writeKeypoints(const std::filesystem::path& path, const std::vector<Keypoint2D>& keypoints);
std::vector<Keypoint2D> readKeypoints(const std::filesystem::path& path, int expected);

void writeDataset(const std::filesystem::path& dir, const Dataset& dataset, const std::string& configJson);

/// Loads frames [first, last] (inclusive; -1 = to the end).
Dataset readDataset(const std::filesystem::path& dir, int first = 0, int last = -1, bool withTruth = true);

DatasetMeta readDatasetMeta(const std::filesystem::path& dir);

} // namespace hcap
