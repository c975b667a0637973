#pragma once

#include "hcap/assets.hpp"
#include "hcap/camproj.hpp"
#include "hcap/common.hpp"

#include <vector>

namespace hcap {

using JointSequence = std::vector<Points>; // [frame][joint], meters

/// Re-poses each frame so every bone (child, parent) keeps its direction but
/// takes the GT length, propagated from the root outward. Zero-length bones
/// inherit the parent bone's direction; `degenerate` counts them.
JointSequence rescaleBones(
    const JointSequence& pred,
    const JointSequence& gt,
    const std::vector<int>& parents,
    int root,
    int* degenerate = nullptr);

/// Mean root position error in millimeters.
double globalLocalizationError(const JointSequence& pred, const JointSequence& gt, int root);

/// Percentage of masked joints within `thresholdMm` after root alignment.
double pck3d(const JointSequence& pred, const JointSequence& gt, const std::vector<int>& mask, int root, double thresholdMm = 150.0);

/// Mean 3DPCK over thresholds 0, 5, ..., 150 mm.
double pckAuc(const JointSequence& pred, const JointSequence& gt, const std::vector<int>& mask, int root);

/// Least-squares similarity transform mapping `source` onto `target`.
struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const {
    return scale * rotation * p + translation;
  }
};

Similarity procrustes(const Points& source, const Points& target);

/// Mean per-joint error in millimeters after per-frame similarity alignment.
double mpjpeProcrustes(const JointSequence& pred, const JointSequence& gt, const std::vector<int>& mask);

/// |A ∩ B| / |A ∪ B|; 1 when both are empty.
double maskIoU(const Mask& a, const Mask& b);

struct IoUFamily {
  double amv = 0.0; // all views
  double rv = 0.0; // all views except the input view
  double sv = 0.0; // input view only
  std::vector<double> perView;
};

/// Combines per-view IoUs into the all/reference/single-view means.
IoUFamily combineIoU(const std::vector<double>& perView, int inputView);

/// Rasterizes the mesh in every camera and compares with the GT masks.
IoUFamily iouFamily(
    const Points& world,
    const std::vector<Eigen::Vector3i>& faces,
    const std::vector<Camera>& cameras,
    const std::vector<Mask>& gtMasks,
    int inputView);

} // namespace hcap
