#pragma once

#include "hcap/assets.hpp"
#include "hcap/camproj.hpp"
#include "hcap/fitter.hpp"
#include "hcap/kinematics.hpp"
#include "hcap/losses.hpp"
#include "hcap/synthgen.hpp"

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include <unistd.h>

#ifndef HCAP_TEST_RIG
#define HCAP_TEST_RIG "assets/capsule_person"
#endif

namespace hcap::test {

inline const CharacterRig& shippedRig() {
  static const CharacterRig rig = loadRigDirectory(HCAP_TEST_RIG);
  return rig;
}

inline Vec3 randomVec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Mat3 randomRotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

// unit cube [0,1]^3, outward CCW faces
inline TemplateMesh cubeMesh() {
  TemplateMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  }
  const int f[12][3] = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                        {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  for (const auto& t : f) {
    m.faces.emplace_back(t[0], t[1], t[2]);
  }
  return m;
}

// UV sphere centered at `center`
inline TemplateMesh sphereMesh(double radius, int rings, int segments, const Vec3& center = Vec3::Zero()) {
  TemplateMesh m;
  m.vertices.push_back(center + Vec3(0, radius, 0));
  for (int r = 1; r < rings; ++r) {
    const double phi = M_PI * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double th = 2.0 * M_PI * s / segments;
      m.vertices.push_back(center + radius * Vec3(std::sin(phi) * std::cos(th), std::cos(phi), std::sin(phi) * std::sin(th)));
    }
  }
  m.vertices.push_back(center + Vec3(0, -radius, 0));
  const int south = static_cast<int>(m.vertices.size()) - 1;
  auto idx = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
  for (int s = 0; s < segments; ++s) {
    m.faces.emplace_back(0, idx(1, s + 1), idx(1, s));
    m.faces.emplace_back(south, idx(rings - 1, s), idx(rings - 1, s + 1));
  }
  for (int r = 1; r < rings - 1; ++r) {
    for (int s = 0; s < segments; ++s) {
      m.faces.emplace_back(idx(r, s), idx(r, s + 1), idx(r + 1, s));
      m.faces.emplace_back(idx(r, s + 1), idx(r + 1, s + 1), idx(r + 1, s));
    }
  }
  return m;
}

// one joint, every vertex skinned to it
inline Skeleton rootOnlySkeleton(int vertices) {
  Skeleton s;
  Joint root;
  root.name = "root";
  root.axes = {Axis::X, Axis::Y, Axis::Z};
  s.joints.push_back(root);
  s.limits.assign(3, {-1.0, 1.0});
  s.landmarks.push_back({"root", 0, Vec3::Zero()});
  s.skinning.assign(vertices, SkinWeights{{0, 1.0}});
  return s;
}

inline CharacterRig cubeRig() {
  return assembleCharacter(cubeMesh(), rootOnlySkeleton(8), {{0, 1.0}});
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() / ("hcap_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const {
    return path_;
  }

 private:
  std::filesystem::path path_;
};

// small synthetic sequence on the shipped rig
inline SynthConfig smallSynth(int frames = 1, int cameras = 4) {
  SynthConfig sc;
  sc.frames = frames;
  sc.cameras = cameras;
  sc.width = 160;
  sc.height = 160;
  sc.focal = 230.0;
  return sc;
}

inline std::shared_ptr<FrameProblem> problemFor(const CharacterRig& rig, const Dataset& ds, int frame) {
  auto p = std::make_shared<FrameProblem>();
  p->rig = &rig;
  p->cameras = ds.cameras;
  for (int c = 0; c < static_cast<int>(ds.cameras.size()); ++c) {
    p->views.push_back(c);
  }
  p->inputCamera = ds.meta.inputCamera;
  p->observations = ds.frames[frame];
  return p;
}

inline MeshState truthMesh(const CharacterRig& rig, const Dataset& ds, int frame) {
  const auto& gt = ds.truth[frame];
  return evaluateMesh(rig, gt.graph, nodeTransforms(rig, gt.pose.theta, gt.pose.alpha), ds.cameras[ds.meta.inputCamera].R, gt.pose.t);
}

inline SequenceInput sequenceFor(const CharacterRig& rig, const Dataset& ds) {
  SequenceInput in;
  in.rig = &rig;
  in.cameras = ds.cameras;
  for (int c = 0; c < static_cast<int>(ds.cameras.size()); ++c) {
    in.views.push_back(c);
  }
  in.inputCamera = ds.meta.inputCamera;
  in.frameIds = ds.frameIds;
  in.frames = ds.frames;
  return in;
}

} // namespace hcap::test
