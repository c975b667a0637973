// Authors the capsule-person rig: an implicit union of capsules polygonized
// with surface nets, a 20-joint / 27-DoF skeleton and 21 landmarks.

#include "hcap/assets.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

using namespace hcap;

namespace {

struct Capsule {
  Vec3 a;
  Vec3 b;
  double radius;
};

double segmentDistance(const Vec3& p, const Vec3& a, const Vec3& b, double* along = nullptr) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  if (along) {
    *along = s;
  }
  return (p - (a + s * ab)).norm();
}

double smoothMin(double a, double b, double k) {
  const double h = std::max(k - std::abs(a - b), 0.0) / k;
  return std::min(a, b) - h * h * k * 0.25;
}

struct Body {
  std::vector<Capsule> capsules;

  double sdf(const Vec3& p) const {
    double d = 1e9;
    for (const auto& c : capsules) {
      d = smoothMin(d, segmentDistance(p, c.a, c.b) - c.radius, 0.03);
    }
    return d;
  }
};

Skeleton makeSkeleton() {
  Skeleton s;
  auto add = [&](const std::string& name, int parent, Vec3 offset, std::vector<Axis> axes) {
    s.joints.push_back({name, parent, offset, std::move(axes)});
    return static_cast<int>(s.joints.size()) - 1;
  };
  using A = Axis;
  const int pelvis = add("pelvis", -1, Vec3::Zero(), {});
  const int spine = add("spine", pelvis, {0, -0.10, 0}, {A::X, A::Y, A::Z});
  const int neck = add("neck", spine, {0, -0.38, 0}, {A::X});
  const int head = add("head", neck, {0, -0.08, 0}, {A::X, A::Y, A::Z});
  std::map<std::string, int> side;
  for (int k = 0; k < 2; ++k) {
    const double sx = k == 0 ? 1.0 : -1.0;
    const std::string p = k == 0 ? "l_" : "r_";
    side[p + "clavicle"] = add(p + "clavicle", spine, {sx * 0.02, -0.34, 0}, {A::Z});
    side[p + "shoulder"] = add(p + "shoulder", side[p + "clavicle"], {sx * 0.19, 0, 0}, {A::X, A::Y, A::Z});
    side[p + "elbow"] = add(p + "elbow", side[p + "shoulder"], {sx * 0.08, 0.27, 0}, {A::X});
    side[p + "wrist"] = add(p + "wrist", side[p + "elbow"], {sx * 0.06, 0.23, -0.09}, {});
  }
  for (int k = 0; k < 2; ++k) {
    const double sx = k == 0 ? 1.0 : -1.0;
    const std::string p = k == 0 ? "l_" : "r_";
    side[p + "hip"] = add(p + "hip", pelvis, {sx * 0.10, 0.08, 0}, {A::X, A::Y, A::Z});
    side[p + "knee"] = add(p + "knee", side[p + "hip"], {0, 0.42, 0}, {A::X});
    side[p + "ankle"] = add(p + "ankle", side[p + "knee"], {0, 0.42, 0}, {A::X});
    side[p + "toe"] = add(p + "toe", side[p + "ankle"], {0, 0.05, -0.14}, {});
  }
  // Limits follow DoF order (joint order, then declared axis order). Mirrored
  // joints flip the sign of y/z rotations, so those ranges are symmetric.
  const std::vector<std::pair<double, double>> limits = {
      {-0.4, 0.6}, {-0.6, 0.6}, {-0.4, 0.4}, // spine
      {-0.5, 0.5}, // neck
      {-0.6, 0.6}, {-1.0, 1.0}, {-0.5, 0.5}, // head
      {-0.3, 0.3}, // l_clavicle
      {-1.5, 1.5}, {-1.0, 1.0}, {-1.0, 1.0}, // l_shoulder
      {-2.2, 0.0}, // l_elbow
      {-0.3, 0.3}, // r_clavicle
      {-1.5, 1.5}, {-1.0, 1.0}, {-1.0, 1.0}, // r_shoulder
      {-2.2, 0.0}, // r_elbow
      {-1.5, 0.5}, {-0.5, 0.5}, {-0.4, 0.4}, // l_hip
      {0.0, 2.2}, // l_knee
      {-0.5, 0.6}, // l_ankle
      {-1.5, 0.5}, {-0.5, 0.5}, {-0.4, 0.4}, // r_hip
      {0.0, 2.2}, // r_knee
      {-0.5, 0.6}, // r_ankle
  };
  for (const auto& [lo, hi] : limits) {
    s.limits.push_back({lo, hi});
  }

  auto landmark = [&](const std::string& name, int joint, Vec3 offset = Vec3::Zero()) {
    s.landmarks.push_back({name, joint, offset});
  };
  landmark("pelvis", pelvis);
  landmark("thorax", neck);
  landmark("head_top", head, {0, -0.22, 0});
  for (const std::string p : {"l_", "r_"}) {
    landmark(p + "shoulder", side[p + "shoulder"]);
    landmark(p + "elbow", side[p + "elbow"]);
    landmark(p + "wrist", side[p + "wrist"]);
  }
  for (const std::string p : {"l_", "r_"}) {
    landmark(p + "hip", side[p + "hip"]);
    landmark(p + "knee", side[p + "knee"]);
    landmark(p + "ankle", side[p + "ankle"]);
    landmark(p + "toe", side[p + "toe"]);
  }
  landmark("nose", head, {0, -0.11, -0.11});
  landmark("l_eye", head, {0.035, -0.14, -0.095});
  landmark("r_eye", head, {-0.035, -0.14, -0.095});
  landmark("chin", head, {0, -0.03, -0.09});

  const std::map<std::string, std::string> parents = {
      {"thorax", "pelvis"},       {"head_top", "thorax"},     {"l_shoulder", "thorax"}, {"r_shoulder", "thorax"},
      {"l_elbow", "l_shoulder"},  {"r_elbow", "r_shoulder"},  {"l_wrist", "l_elbow"},   {"r_wrist", "r_elbow"},
      {"l_hip", "pelvis"},        {"r_hip", "pelvis"},        {"l_knee", "l_hip"},      {"r_knee", "r_hip"},
      {"l_ankle", "l_knee"},      {"r_ankle", "r_knee"},      {"l_toe", "l_ankle"},     {"r_toe", "r_ankle"},
      {"nose", "head_top"},       {"l_eye", "head_top"},      {"r_eye", "head_top"},    {"chin", "head_top"},
  };
  s.eval.root = s.landmarkIndex("pelvis");
  s.eval.parents.assign(s.landmarks.size(), -1);
  for (const auto& [child, parent] : parents) {
    s.eval.parents[s.landmarkIndex(child)] = s.landmarkIndex(parent);
  }
  for (const std::string name :
       {"head_top", "thorax", "l_shoulder", "r_shoulder", "l_elbow", "r_elbow", "l_wrist", "r_wrist", "l_hip", "r_hip",
        "l_knee", "r_knee", "l_ankle", "r_ankle"}) {
    s.eval.mask.push_back(s.landmarkIndex(name));
  }
  return s;
}

struct Bone {
  int joint;
  Vec3 a;
  Vec3 b;
};

struct Authoring {
  Body body;
  std::vector<Bone> bones;
  std::vector<int> skinClassBones; // bones whose surface is bare skin
};

Authoring author(const Skeleton& s) {
  const Points j = s.restJointPositions();
  auto at = [&](const std::string& name) { return j[s.jointIndex(name)]; };
  Authoring out;
  auto& caps = out.body.capsules;
  caps.push_back({{-0.08, 0.04, 0}, {0.08, 0.04, 0}, 0.11});
  for (double x : {-0.06, 0.06}) {
    caps.push_back({{x, -0.02, 0}, {x, -0.36, 0}, 0.10});
  }
  caps.push_back({at("neck") + Vec3(0, 0.04, 0), at("head"), 0.05});
  const Vec3 headCenter = at("head") + Vec3(0, -0.11, 0);
  caps.push_back({headCenter, headCenter, 0.11});
  for (const std::string p : {"l_", "r_"}) {
    const Vec3 wrist = at(p + "wrist");
    const Vec3 dir = (wrist - at(p + "elbow")).normalized();
    caps.push_back({Vec3(0, -0.40, 0), at(p + "shoulder"), 0.06});
    caps.push_back({at(p + "shoulder"), at(p + "elbow"), 0.05});
    caps.push_back({at(p + "elbow"), wrist, 0.04});
    caps.push_back({wrist + 0.05 * dir, wrist + 0.05 * dir, 0.045});
    caps.push_back({at(p + "hip"), at(p + "knee"), 0.07});
    caps.push_back({at(p + "knee"), at(p + "ankle"), 0.05});
    caps.push_back({at(p + "ankle"), at(p + "toe"), 0.04});
  }

  auto bone = [&](const std::string& joint, const Vec3& a, const Vec3& b) {
    out.bones.push_back({s.jointIndex(joint), a, b});
  };
  bone("pelvis", at("pelvis"), at("spine"));
  bone("pelvis", at("l_hip") - Vec3(0, 0.06, 0), at("r_hip") - Vec3(0, 0.06, 0));
  bone("spine", at("spine"), at("neck"));
  bone("neck", at("neck"), at("head"));
  bone("head", at("head"), at("head") + Vec3(0, -0.22, 0));
  for (const std::string p : {"l_", "r_"}) {
    const Vec3 wrist = at(p + "wrist");
    const Vec3 dir = (wrist - at(p + "elbow")).normalized();
    bone(p + "clavicle", at(p + "clavicle"), at(p + "shoulder"));
    bone(p + "shoulder", at(p + "shoulder"), at(p + "elbow"));
    bone(p + "elbow", at(p + "elbow"), wrist);
    bone(p + "wrist", wrist, wrist + 0.09 * dir);
    bone(p + "hip", at(p + "hip"), at(p + "knee"));
    bone(p + "knee", at(p + "knee"), at(p + "ankle"));
    bone(p + "ankle", at(p + "ankle"), at(p + "toe"));
    bone(p + "toe", at(p + "toe"), at(p + "toe") + Vec3(0, 0, -0.03));
  }
  for (const std::string name : {"neck", "head", "l_elbow", "l_wrist", "r_elbow", "r_wrist"}) {
    out.skinClassBones.push_back(s.jointIndex(name));
  }
  return out;
}

// Naive surface nets on a regular grid; one vertex per sign-changing cell.
TemplateMesh polygonize(const Body& body, const Vec3& lo, const Vec3& hi, double h) {
  const int nx = static_cast<int>(std::ceil((hi[0] - lo[0]) / h)) + 1;
  const int ny = static_cast<int>(std::ceil((hi[1] - lo[1]) / h)) + 1;
  const int nz = static_cast<int>(std::ceil((hi[2] - lo[2]) / h)) + 1;
  auto gid = [&](int i, int j, int k) { return (static_cast<size_t>(k) * ny + j) * nx + i; };
  auto pos = [&](int i, int j, int k) { return Vec3(lo[0] + i * h, lo[1] + j * h, lo[2] + k * h); };
  std::vector<double> f(static_cast<size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        double v = body.sdf(pos(i, j, k));
        f[gid(i, j, k)] = v == 0.0 ? 1e-12 : v;
      }
    }
  }
  TemplateMesh mesh;
  std::vector<int> cellVertex(static_cast<size_t>(nx) * ny * nz, -1);
  static const int corner[8][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {0, 0, 1}, {1, 0, 1}, {0, 1, 1}, {1, 1, 1}};
  static const int cellEdges[12][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3}, {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  for (int k = 0; k + 1 < nz; ++k) {
    for (int j = 0; j + 1 < ny; ++j) {
      for (int i = 0; i + 1 < nx; ++i) {
        Vec3 sum = Vec3::Zero();
        int count = 0;
        for (const auto& e : cellEdges) {
          const int* c0 = corner[e[0]];
          const int* c1 = corner[e[1]];
          const double f0 = f[gid(i + c0[0], j + c0[1], k + c0[2])];
          const double f1 = f[gid(i + c1[0], j + c1[1], k + c1[2])];
          if ((f0 < 0.0) != (f1 < 0.0)) {
            const double s = f0 / (f0 - f1);
            sum += (1.0 - s) * pos(i + c0[0], j + c0[1], k + c0[2]) + s * pos(i + c1[0], j + c1[1], k + c1[2]);
            ++count;
          }
        }
        if (count > 0) {
          cellVertex[gid(i, j, k)] = mesh.vertexCount();
          mesh.vertices.push_back(sum / count);
        }
      }
    }
  }
  auto emitQuad = [&](std::array<int, 4> q, bool flip) {
    if (flip) {
      std::swap(q[1], q[3]);
    }
    const auto& v = mesh.vertices;
    if ((v[q[0]] - v[q[2]]).squaredNorm() <= (v[q[1]] - v[q[3]]).squaredNorm()) {
      mesh.faces.emplace_back(q[0], q[1], q[2]);
      mesh.faces.emplace_back(q[0], q[2], q[3]);
    } else {
      mesh.faces.emplace_back(q[0], q[1], q[3]);
      mesh.faces.emplace_back(q[1], q[2], q[3]);
    }
  };
  for (int k = 1; k + 1 < nz; ++k) {
    for (int j = 1; j + 1 < ny; ++j) {
      for (int i = 1; i + 1 < nx; ++i) {
        const bool inside = f[gid(i, j, k)] < 0.0;
        if (inside != (f[gid(i + 1, j, k)] < 0.0)) {
          emitQuad({cellVertex[gid(i, j - 1, k - 1)], cellVertex[gid(i, j, k - 1)], cellVertex[gid(i, j, k)], cellVertex[gid(i, j - 1, k)]}, !inside);
        }
        if (inside != (f[gid(i, j + 1, k)] < 0.0)) {
          emitQuad({cellVertex[gid(i - 1, j, k - 1)], cellVertex[gid(i - 1, j, k)], cellVertex[gid(i, j, k)], cellVertex[gid(i, j, k - 1)]}, !inside);
        }
        if (inside != (f[gid(i, j, k + 1)] < 0.0)) {
          emitQuad({cellVertex[gid(i - 1, j - 1, k)], cellVertex[gid(i, j - 1, k)], cellVertex[gid(i, j, k)], cellVertex[gid(i - 1, j, k)]}, !inside);
        }
      }
    }
  }
  return mesh;
}

TemplateMesh largestComponent(const TemplateMesh& mesh) {
  const int n = mesh.vertexCount();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      x = parent[x] = parent[parent[x]];
    }
    return x;
  };
  for (const auto& f : mesh.faces) {
    parent[find(f[0])] = find(f[1]);
    parent[find(f[1])] = find(f[2]);
  }
  std::map<int, int> size;
  for (const auto& f : mesh.faces) {
    ++size[find(f[0])];
  }
  int best = -1;
  for (const auto& [root, count] : size) {
    if (best < 0 || count > size[best]) {
      best = root;
    }
  }
  TemplateMesh out;
  std::vector<int> remap(n, -1);
  for (const auto& f : mesh.faces) {
    if (find(f[0]) != best) {
      continue;
    }
    Eigen::Vector3i g;
    for (int c = 0; c < 3; ++c) {
      if (remap[f[c]] < 0) {
        remap[f[c]] = out.vertexCount();
        out.vertices.push_back(mesh.vertices[f[c]]);
      }
      g[c] = remap[f[c]];
    }
    out.faces.push_back(g);
  }
  return out;
}

void checkManifold(const TemplateMesh& mesh) {
  for (const auto& e : buildEdges(mesh.faces)) {
    if (e.faces.size() != 2) {
      throw DataError("generated mesh is not a closed manifold (edge with " + std::to_string(e.faces.size()) + " faces)");
    }
  }
  const int euler = mesh.vertexCount() - static_cast<int>(buildEdges(mesh.faces).size()) + static_cast<int>(mesh.faces.size());
  if (euler != 2) {
    std::cerr << "warning: Euler characteristic " << euler << " (genus " << (2 - euler) / 2 << ")\n";
  }
}

} // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_capsule_person OUTPUT_DIR\n";
    return 2;
  }
  try {
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);
    Skeleton skeleton = makeSkeleton();
    const Authoring a = author(skeleton);
    TemplateMesh mesh = largestComponent(polygonize(a.body, {-0.55, -0.85, -0.35}, {0.55, 1.05, 0.25}, 0.025));
    checkManifold(mesh);

    skeleton.skinning.resize(mesh.vertexCount());
    mesh.rigidityClass.resize(mesh.vertexCount());
    for (int i = 0; i < mesh.vertexCount(); ++i) {
      std::vector<std::pair<double, int>> d;
      for (size_t b = 0; b < a.bones.size(); ++b) {
        d.emplace_back(segmentDistance(mesh.vertices[i], a.bones[b].a, a.bones[b].b), static_cast<int>(b));
      }
      std::sort(d.begin(), d.end());
      std::map<int, double> byJoint;
      for (int c = 0; c < 3; ++c) {
        byJoint[a.bones[d[c].second].joint] += 1.0 / std::pow(std::max(d[c].first, 1e-4), 6);
      }
      double total = 0.0;
      for (const auto& [joint, w] : byJoint) {
        total += w;
      }
      for (const auto& [joint, w] : byJoint) {
        if (w / total > 1e-4) {
          skeleton.skinning[i].push_back({joint, w / total});
        }
      }
      double kept = 0.0;
      for (const auto& inf : skeleton.skinning[i]) {
        kept += inf.weight;
      }
      for (auto& inf : skeleton.skinning[i]) {
        inf.weight /= kept;
      }
      const int nearest = a.bones[d[0].second].joint;
      const bool bare = std::find(a.skinClassBones.begin(), a.skinClassBones.end(), nearest) != a.skinClassBones.end();
      mesh.rigidityClass[i] = bare ? 0 : 1;
    }

    writeObj(dir / "mesh.obj", mesh.vertices, mesh.faces);
    writeSkeleton(dir / "skeleton.json", skeleton);
    {
      std::ofstream out(dir / "rigidity.txt");
      for (int c : mesh.rigidityClass) {
        out << c << '\n';
      }
    }
    nlohmann::json rig = {
        {"mesh", "mesh.obj"},
        {"skeleton", "skeleton.json"},
        {"rigidity", "rigidity.txt"},
        {"rigidity_table", {{"0", 1.0}, {"1", 0.5}}},
        {"graph", {{"nodes", 50}, {"influences", 4}, {"neighbors", 8}}},
    };
    std::ofstream(dir / "rig.json") << rig.dump(1) << '\n';

    const CharacterRig loaded = loadRigDirectory(dir);
    std::cout << "vertices " << loaded.mesh.vertexCount() << ", faces " << loaded.mesh.faces.size() << ", dof "
              << loaded.skeleton.dofCount() << ", landmarks " << loaded.skeleton.landmarkCount() << ", nodes "
              << loaded.graph.nodeCount() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
