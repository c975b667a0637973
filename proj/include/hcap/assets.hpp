#pragma once

#include "hcap/common.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hcap {

struct TemplateMesh {
  Points vertices; // rest pose, meters, root joint at the origin
  std::vector<Eigen::Vector3i> faces; // counter-clockwise seen from outside
  Points normals;
  std::vector<int> rigidityClass;

  int vertexCount() const {
    return static_cast<int>(vertices.size());
  }
};

/// Area-weighted vertex normals, unit length. Isolated vertices get +z.
Points computeVertexNormals(const Points& vertices, const std::vector<Eigen::Vector3i>& faces);

/// Undirected mesh edges (i < j) with their incident faces.
struct MeshEdge {
  int a;
  int b;
  std::vector<int> faces;
};

std::vector<MeshEdge> buildEdges(const std::vector<Eigen::Vector3i>& faces);

/// Per-vertex adjacency with Euclidean edge lengths.
struct MeshAdjacency {
  std::vector<std::vector<std::pair<int, double>>> neighbors;
};

MeshAdjacency buildAdjacency(const Points& vertices, const std::vector<Eigen::Vector3i>& faces);

/// Single-source Dijkstra over mesh edges.
std::vector<double> geodesicDistances(const MeshAdjacency& adjacency, int source);

int connectedComponents(const MeshAdjacency& adjacency);

enum class Axis { X = 0, Y = 1, Z = 2 };

struct Joint {
  std::string name;
  int parent = -1;
  Vec3 offset = Vec3::Zero(); // from parent joint, in the parent's rest frame
  std::vector<Axis> axes; // local rotation = R(axes[0]) * R(axes[1]) * ...
};

struct Landmark {
  std::string name;
  int joint = 0;
  Vec3 offset = Vec3::Zero();
};

struct DofLimit {
  double lo = 0.0;
  double hi = 0.0;
};

struct SkinInfluence {
  int bone = 0;
  double weight = 0.0;
};

using SkinWeights = std::vector<SkinInfluence>;

/// Landmark tree and joint subset used by the evaluation metrics.
struct EvalLayout {
  int root = 0; // landmark index
  std::vector<int> parents; // per landmark, -1 for the root and for unused landmarks
  std::vector<int> mask; // evaluated landmark indices
};

struct Skeleton {
  std::vector<Joint> joints;
  std::vector<Landmark> landmarks;
  std::vector<DofLimit> limits; // one per DoF
  std::vector<SkinWeights> skinning; // one per mesh vertex
  EvalLayout eval;

  int dofCount() const;
  int jointCount() const {
    return static_cast<int>(joints.size());
  }
  int landmarkCount() const {
    return static_cast<int>(landmarks.size());
  }
  /// Index of the first DoF owned by each joint.
  std::vector<int> dofOffsets() const;
  Points restJointPositions() const;
  Points restLandmarkPositions() const;
  /// Hierarchy depth of each landmark's joint (root = 0).
  std::vector<int> landmarkDepths() const;
  int jointIndex(const std::string& name) const;
  int landmarkIndex(const std::string& name) const;
};

struct NodeInfluence {
  int node = 0;
  double weight = 0.0;
};

struct DeformGraph {
  Points nodes; // G, rest pose
  std::vector<int> nodeVertex;
  std::vector<std::vector<int>> neighbors; // N_n(k), symmetric
  std::vector<std::vector<double>> rigidity; // u_{k,l}, parallel to neighbors
  std::vector<std::vector<NodeInfluence>> vertexInfluences; // N_vn(i) with w_{i,k}
  std::vector<SkinWeights> nodeSkinning;
  std::vector<int> landmarkNode; // node each landmark is attached to
  Points landmarkRest; // canonical landmark positions

  int nodeCount() const {
    return static_cast<int>(nodes.size());
  }
};

struct GraphOptions {
  int nodes = 50;
  int influencesPerVertex = 4;
  int neighborsPerNode = 8;
};

struct CharacterRig {
  TemplateMesh mesh;
  Skeleton skeleton;
  std::vector<double> vertexRigidity; // s_i
  DeformGraph graph;
  std::vector<MeshEdge> edges;
};

using RigidityTable = std::map<int, double>;

TemplateMesh readObj(const std::filesystem::path& path);
void writeObj(const std::filesystem::path& path, const Points& vertices, const std::vector<Eigen::Vector3i>& faces);
std::vector<int> readRigidityClasses(const std::filesystem::path& path);
Skeleton readSkeleton(const std::filesystem::path& path);
void writeSkeleton(const std::filesystem::path& path, const Skeleton& skeleton);

/// Validates the skeleton on its own (topology, limits, landmarks).
void validateSkeleton(const Skeleton& skeleton);

/// Loads mesh, skeleton and rigidity sidecar, validates every invariant and
/// resolves per-vertex rigidity weights. The graph is left empty.
CharacterRig loadCharacter(
    const std::filesystem::path& meshFile,
    const std::filesystem::path& skeletonFile,
    const std::filesystem::path& rigidityFile,
    const RigidityTable& table);

/// Same as loadCharacter but from in-memory parts.
CharacterRig assembleCharacter(TemplateMesh mesh, Skeleton skeleton, const RigidityTable& table);

/// Builds the embedded deformation graph: geodesic farthest-point sampling
/// seeded at vertex 0, (1 - d/dmax)^2 vertex weights, nearest-node neighbors.
DeformGraph buildGraph(const CharacterRig& rig, const GraphOptions& options = {});

/// Rig directory with rig.json naming mesh, skeleton, rigidity sidecar,
/// rigidity table and graph options. Builds the graph.
CharacterRig loadRigDirectory(const std::filesystem::path& directory);

} // namespace hcap
