#include "hcap/assets.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>
#include <unordered_map>

namespace hcap {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec3 readVec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw DataError("expected 3-vector for " + what);
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

int resolveJoint(const json& j, const std::vector<Joint>& joints, const std::string& what) {
  if (j.is_null()) {
    return -1;
  }
  if (j.is_number_integer()) {
    return j.get<int>();
  }
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    for (size_t i = 0; i < joints.size(); ++i) {
      if (joints[i].name == name) {
        return static_cast<int>(i);
      }
    }
    throw DataError("unknown joint '" + name + "' in " + what);
  }
  throw DataError("malformed joint reference in " + what);
}

std::string axesToString(const std::vector<Axis>& axes) {
  std::string s;
  for (auto a : axes) {
    s += static_cast<char>('x' + static_cast<int>(a));
  }
  return s;
}

} // namespace

// --- mesh ------------------------------------------------------------------

Points computeVertexNormals(const Points& vertices, const std::vector<Eigen::Vector3i>& faces) {
  Points normals(vertices.size(), Vec3::Zero());
  for (const auto& f : faces) {
    const Vec3 n = (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
    for (int c = 0; c < 3; ++c) {
      normals[f[c]] += n;
    }
  }
  for (auto& n : normals) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
  }
  return normals;
}

std::vector<MeshEdge> buildEdges(const std::vector<Eigen::Vector3i>& faces) {
  std::map<std::pair<int, int>, std::vector<int>> lookup;
  for (size_t f = 0; f < faces.size(); ++f) {
    for (int c = 0; c < 3; ++c) {
      int a = faces[f][c];
      int b = faces[f][(c + 1) % 3];
      if (a > b) {
        std::swap(a, b);
      }
      lookup[{a, b}].push_back(static_cast<int>(f));
    }
  }
  std::vector<MeshEdge> edges;
  edges.reserve(lookup.size());
  for (auto& [key, fs] : lookup) {
    edges.push_back({key.first, key.second, std::move(fs)});
  }
  return edges;
}

MeshAdjacency buildAdjacency(const Points& vertices, const std::vector<Eigen::Vector3i>& faces) {
  MeshAdjacency adj;
  adj.neighbors.resize(vertices.size());
  for (const auto& e : buildEdges(faces)) {
    const double len = (vertices[e.a] - vertices[e.b]).norm();
    adj.neighbors[e.a].emplace_back(e.b, len);
    adj.neighbors[e.b].emplace_back(e.a, len);
  }
  return adj;
}

std::vector<double> geodesicDistances(const MeshAdjacency& adjacency, int source) {
  std::vector<double> dist(adjacency.neighbors.size(), kInf);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) {
      continue;
    }
    for (const auto& [w, len] : adjacency.neighbors[v]) {
      const double nd = d + len;
      if (nd < dist[w]) {
        dist[w] = nd;
        queue.emplace(nd, w);
      }
    }
  }
  return dist;
}

int connectedComponents(const MeshAdjacency& adjacency) {
  const size_t n = adjacency.neighbors.size();
  std::vector<char> seen(n, 0);
  int components = 0;
  std::vector<int> stack;
  for (size_t s = 0; s < n; ++s) {
    if (seen[s]) {
      continue;
    }
    ++components;
    stack.push_back(static_cast<int>(s));
    seen[s] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& [w, len] : adjacency.neighbors[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  return components;
}

TemplateMesh readObj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open mesh file " + path.string());
  }
  TemplateMesh mesh;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') {
      continue;
    }
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v[0] >> v[1] >> v[2])) {
        throw DataError("malformed vertex at " + path.string() + ":" + std::to_string(lineNo));
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string token;
      while (ss >> token) {
        int idx = 0;
        try {
          idx = std::stoi(token.substr(0, token.find('/')));
        } catch (const std::exception&) {
          throw DataError("malformed face at " + path.string() + ":" + std::to_string(lineNo));
        }
        idx = idx < 0 ? static_cast<int>(mesh.vertices.size()) + idx : idx - 1;
        poly.push_back(idx);
      }
      if (poly.size() < 3) {
        throw DataError("face with fewer than 3 vertices at " + path.string() + ":" + std::to_string(lineNo));
      }
      for (size_t k = 1; k + 1 < poly.size(); ++k) {
        mesh.faces.emplace_back(poly[0], poly[k], poly[k + 1]);
      }
    }
  }
  if (mesh.vertices.empty() || mesh.faces.empty()) {
    throw DataError("mesh file has no geometry: " + path.string());
  }
  return mesh;
}

void writeObj(const std::filesystem::path& path, const Points& vertices, const std::vector<Eigen::Vector3i>& faces) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << std::setprecision(9);
  for (const auto& v : vertices) {
    out << "v " << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  }
  for (const auto& f : faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
}

std::vector<int> readRigidityClasses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open rigidity file " + path.string());
  }
  std::vector<int> classes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    try {
      classes.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw DataError("malformed rigidity class '" + line + "' in " + path.string());
    }
  }
  return classes;
}

// --- skeleton --------------------------------------------------------------

int Skeleton::dofCount() const {
  int n = 0;
  for (const auto& j : joints) {
    n += static_cast<int>(j.axes.size());
  }
  return n;
}

std::vector<int> Skeleton::dofOffsets() const {
  std::vector<int> offsets(joints.size());
  int n = 0;
  for (size_t j = 0; j < joints.size(); ++j) {
    offsets[j] = n;
    n += static_cast<int>(joints[j].axes.size());
  }
  return offsets;
}

Points Skeleton::restJointPositions() const {
  Points pos(joints.size(), Vec3::Zero());
  for (size_t j = 1; j < joints.size(); ++j) {
    pos[j] = pos[joints[j].parent] + joints[j].offset;
  }
  return pos;
}

Points Skeleton::restLandmarkPositions() const {
  const auto jointPos = restJointPositions();
  Points out;
  out.reserve(landmarks.size());
  for (const auto& l : landmarks) {
    out.push_back(jointPos[l.joint] + l.offset);
  }
  return out;
}

std::vector<int> Skeleton::landmarkDepths() const {
  std::vector<int> jointDepth(joints.size(), 0);
  for (size_t j = 1; j < joints.size(); ++j) {
    jointDepth[j] = jointDepth[joints[j].parent] + 1;
  }
  std::vector<int> out;
  for (const auto& l : landmarks) {
    out.push_back(jointDepth[l.joint]);
  }
  return out;
}

int Skeleton::jointIndex(const std::string& name) const {
  for (size_t j = 0; j < joints.size(); ++j) {
    if (joints[j].name == name) {
      return static_cast<int>(j);
    }
  }
  throw DataError("unknown joint '" + name + "'");
}

int Skeleton::landmarkIndex(const std::string& name) const {
  for (size_t m = 0; m < landmarks.size(); ++m) {
    if (landmarks[m].name == name) {
      return static_cast<int>(m);
    }
  }
  throw DataError("unknown landmark '" + name + "'");
}

void validateSkeleton(const Skeleton& s) {
  if (s.joints.empty()) {
    throw DataError("skeleton has no joints");
  }
  std::set<std::string> names;
  for (size_t j = 0; j < s.joints.size(); ++j) {
    const auto& joint = s.joints[j];
    if (!names.insert(joint.name).second) {
      throw DataError("duplicate joint name '" + joint.name + "'");
    }
    if (j == 0 ? joint.parent != -1 : (joint.parent < 0 || joint.parent >= static_cast<int>(j))) {
      throw DataError("joint '" + joint.name + "' violates parent ordering");
    }
    std::set<Axis> axes(joint.axes.begin(), joint.axes.end());
    if (axes.size() != joint.axes.size()) {
      throw DataError("joint '" + joint.name + "' repeats a rotation axis");
    }
  }
  if (static_cast<int>(s.limits.size()) != s.dofCount()) {
    throw DataError(
        "limit count " + std::to_string(s.limits.size()) + " does not match dof count " +
        std::to_string(s.dofCount()));
  }
  for (size_t i = 0; i < s.limits.size(); ++i) {
    if (!(s.limits[i].lo <= s.limits[i].hi)) {
      throw DataError("invalid limits on DoF " + std::to_string(i));
    }
  }
  for (const auto& l : s.landmarks) {
    if (l.joint < 0 || l.joint >= s.jointCount()) {
      throw DataError("landmark '" + l.name + "' references invalid joint");
    }
  }
  const int m = s.landmarkCount();
  if (!s.eval.parents.empty() && static_cast<int>(s.eval.parents.size()) != m) {
    throw DataError("evaluation parents do not cover all landmarks");
  }
  for (int p : s.eval.parents) {
    if (p < -1 || p >= m) {
      throw DataError("evaluation parent out of range");
    }
  }
  for (int k : s.eval.mask) {
    if (k < 0 || k >= m) {
      throw DataError("evaluation mask index out of range");
    }
  }
}

Skeleton readSkeleton(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open skeleton file " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed skeleton file " + path.string() + ": " + e.what());
  }
  Skeleton s;
  try {
    for (const auto& jj : j.at("joints")) {
      Joint joint;
      joint.name = jj.at("name").get<std::string>();
      joint.parent = resolveJoint(jj.value("parent", json()), s.joints, "joint " + joint.name);
      joint.offset = readVec3(jj.at("offset"), "joint offset");
      for (char c : jj.value("axes", std::string())) {
        if (c < 'x' || c > 'z') {
          throw DataError("invalid axis '" + std::string(1, c) + "' on joint " + joint.name);
        }
        joint.axes.push_back(static_cast<Axis>(c - 'x'));
      }
      s.joints.push_back(std::move(joint));
    }
    for (const auto& lim : j.at("limits")) {
      if (!lim.is_array() || lim.size() != 2) {
        throw DataError("limit entries must be [min, max]");
      }
      s.limits.push_back({lim[0].get<double>(), lim[1].get<double>()});
    }
    for (const auto& jl : j.at("landmarks")) {
      Landmark l;
      l.name = jl.at("name").get<std::string>();
      l.joint = resolveJoint(jl.at("joint"), s.joints, "landmark " + l.name);
      l.offset = jl.contains("offset") ? readVec3(jl.at("offset"), "landmark offset") : Vec3::Zero();
      s.landmarks.push_back(std::move(l));
    }
    if (j.contains("skinning")) {
      for (const auto& vs : j.at("skinning")) {
        SkinWeights w;
        for (const auto& pair : vs) {
          w.push_back({pair.at(0).get<int>(), pair.at(1).get<double>()});
        }
        s.skinning.push_back(std::move(w));
      }
    }
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      auto landmarkByName = [&](const std::string& name) {
        for (size_t m = 0; m < s.landmarks.size(); ++m) {
          if (s.landmarks[m].name == name) {
            return static_cast<int>(m);
          }
        }
        throw DataError("evaluation references unknown landmark '" + name + "'");
      };
      s.eval.root = landmarkByName(e.at("root").get<std::string>());
      s.eval.parents.assign(s.landmarks.size(), -1);
      for (const auto& [child, parent] : e.at("parents").items()) {
        s.eval.parents[landmarkByName(child)] = landmarkByName(parent.get<std::string>());
      }
      for (const auto& name : e.at("mask")) {
        s.eval.mask.push_back(landmarkByName(name.get<std::string>()));
      }
    }
  } catch (const json::exception& e) {
    throw DataError("malformed skeleton file " + path.string() + ": " + e.what());
  }
  validateSkeleton(s);
  return s;
}

void writeSkeleton(const std::filesystem::path& path, const Skeleton& s) {
  json j;
  j["joints"] = json::array();
  for (const auto& joint : s.joints) {
    j["joints"].push_back(
        {{"name", joint.name},
         {"parent", joint.parent < 0 ? json() : json(s.joints[joint.parent].name)},
         {"offset", {joint.offset[0], joint.offset[1], joint.offset[2]}},
         {"axes", axesToString(joint.axes)}});
  }
  j["limits"] = json::array();
  for (const auto& l : s.limits) {
    j["limits"].push_back({l.lo, l.hi});
  }
  j["landmarks"] = json::array();
  for (const auto& l : s.landmarks) {
    j["landmarks"].push_back(
        {{"name", l.name}, {"joint", s.joints[l.joint].name}, {"offset", {l.offset[0], l.offset[1], l.offset[2]}}});
  }
  if (!s.eval.parents.empty()) {
    json parents = json::object();
    for (size_t m = 0; m < s.eval.parents.size(); ++m) {
      if (s.eval.parents[m] >= 0) {
        parents[s.landmarks[m].name] = s.landmarks[s.eval.parents[m]].name;
      }
    }
    json mask = json::array();
    for (int k : s.eval.mask) {
      mask.push_back(s.landmarks[k].name);
    }
    j["evaluation"] = {{"root", s.landmarks[s.eval.root].name}, {"parents", parents}, {"mask", mask}};
  }
  j["skinning"] = json::array();
  for (const auto& w : s.skinning) {
    json v = json::array();
    for (const auto& inf : w) {
      v.push_back({inf.bone, inf.weight});
    }
    j["skinning"].push_back(v);
  }
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << j.dump(1) << '\n';
}

// --- character -------------------------------------------------------------

CharacterRig assembleCharacter(TemplateMesh mesh, Skeleton skeleton, const RigidityTable& table) {
  const int n = mesh.vertexCount();
  for (const auto& f : mesh.faces) {
    for (int c = 0; c < 3; ++c) {
      if (f[c] < 0 || f[c] >= n) {
        throw DataError("face index out of range");
      }
    }
  }
  if (connectedComponents(buildAdjacency(mesh.vertices, mesh.faces)) != 1) {
    throw DataError("disconnected mesh");
  }
  validateSkeleton(skeleton);
  if (static_cast<int>(skeleton.skinning.size()) != n) {
    throw DataError("skinning weights do not cover every vertex");
  }
  for (const auto& w : skeleton.skinning) {
    double sum = 0.0;
    for (const auto& inf : w) {
      if (inf.bone < 0 || inf.bone >= skeleton.jointCount() || inf.weight < 0.0) {
        throw DataError("invalid skinning influence");
      }
      sum += inf.weight;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw DataError("skinning weights not normalized");
    }
  }
  if (mesh.rigidityClass.empty()) {
    mesh.rigidityClass.assign(n, 0);
  }
  if (static_cast<int>(mesh.rigidityClass.size()) != n) {
    throw DataError("rigidity class count does not match vertex count");
  }
  CharacterRig rig;
  rig.vertexRigidity.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto it = table.find(mesh.rigidityClass[i]);
    if (it == table.end()) {
      throw DataError("missing rigidity class " + std::to_string(mesh.rigidityClass[i]));
    }
    rig.vertexRigidity[i] = it->second;
  }
  mesh.normals = computeVertexNormals(mesh.vertices, mesh.faces);
  rig.edges = buildEdges(mesh.faces);
  rig.mesh = std::move(mesh);
  rig.skeleton = std::move(skeleton);
  return rig;
}

CharacterRig loadCharacter(
    const std::filesystem::path& meshFile,
    const std::filesystem::path& skeletonFile,
    const std::filesystem::path& rigidityFile,
    const RigidityTable& table) {
  auto mesh = readObj(meshFile);
  mesh.rigidityClass = readRigidityClasses(rigidityFile);
  return assembleCharacter(std::move(mesh), readSkeleton(skeletonFile), table);
}

// --- graph -----------------------------------------------------------------

DeformGraph buildGraph(const CharacterRig& rig, const GraphOptions& options) {
  const auto& verts = rig.mesh.vertices;
  const int n = rig.mesh.vertexCount();
  const int k = options.nodes;
  if (k < options.neighborsPerNode + 1 || k > n) {
    throw DataError("graph node count " + std::to_string(k) + " out of range");
  }
  if (options.influencesPerVertex < 1) {
    throw DataError("influences per vertex must be positive");
  }
  const auto adjacency = buildAdjacency(verts, rig.mesh.faces);

  DeformGraph g;
  std::vector<std::vector<double>> dist; // per node, to every vertex
  std::vector<double> nearest(n, kInf);
  std::vector<char> chosen(n, 0);
  int next = 0;
  for (int node = 0; node < k; ++node) {
    g.nodeVertex.push_back(next);
    chosen[next] = 1;
    dist.push_back(geodesicDistances(adjacency, next));
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(dist.back()[i])) {
        throw DataError("geodesic distance infinite: disconnected mesh");
      }
      nearest[i] = std::min(nearest[i], dist.back()[i]);
    }
    next = -1;
    for (int i = 0; i < n; ++i) {
      if (!chosen[i] && (next < 0 || nearest[i] > nearest[next])) {
        next = i;
      }
    }
  }
  for (int v : g.nodeVertex) {
    g.nodes.push_back(verts[v]);
  }

  // Vertex-to-node weights.
  const int influences = std::min(options.influencesPerVertex, k);
  g.vertexInfluences.resize(n);
  std::vector<std::pair<double, int>> order(k);
  for (int i = 0; i < n; ++i) {
    for (int node = 0; node < k; ++node) {
      order[node] = {dist[node][i], node};
    }
    const int keep = std::min(influences + 1, k);
    std::partial_sort(order.begin(), order.begin() + keep, order.end());
    const double dmax = (k > influences) ? order[influences].first : order[influences - 1].first * (1.0 + 1e-9) + 1e-12;
    double sum = 0.0;
    auto& infl = g.vertexInfluences[i];
    for (int c = 0; c < influences; ++c) {
      const double x = dmax > 0.0 ? 1.0 - order[c].first / dmax : 0.0;
      infl.push_back({order[c].second, x * x});
      sum += x * x;
    }
    for (auto& inf : infl) {
      inf.weight = sum > 0.0 ? inf.weight / sum : 1.0 / influences;
    }
  }

  // Node neighborhoods from node-to-node geodesics, then symmetrized.
  std::vector<std::set<int>> nbr(k);
  for (int a = 0; a < k; ++a) {
    std::vector<std::pair<double, int>> cand;
    for (int b = 0; b < k; ++b) {
      if (b != a) {
        cand.emplace_back(dist[a][g.nodeVertex[b]], b);
      }
    }
    const int keep = std::min<int>(options.neighborsPerNode, static_cast<int>(cand.size()));
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end());
    for (int c = 0; c < keep; ++c) {
      nbr[a].insert(cand[c].second);
      nbr[cand[c].second].insert(a);
    }
  }

  // Vertices influenced by each node.
  std::vector<std::vector<int>> influenced(k);
  for (int i = 0; i < n; ++i) {
    for (const auto& inf : g.vertexInfluences[i]) {
      if (inf.weight > 0.0) {
        influenced[inf.node].push_back(i);
      }
    }
  }
  g.neighbors.resize(k);
  g.rigidity.resize(k);
  std::vector<int> merged;
  for (int a = 0; a < k; ++a) {
    for (int b : nbr[a]) {
      merged.clear();
      std::set_union(
          influenced[a].begin(), influenced[a].end(), influenced[b].begin(), influenced[b].end(),
          std::back_inserter(merged));
      double sum = 0.0;
      for (int i : merged) {
        sum += rig.vertexRigidity[i];
      }
      g.neighbors[a].push_back(b);
      g.rigidity[a].push_back(merged.empty() ? 1.0 : sum / static_cast<double>(merged.size()));
    }
  }

  // Node skinning: influence-weighted average of vertex skinning.
  const int bones = rig.skeleton.jointCount();
  g.nodeSkinning.resize(k);
  std::vector<std::vector<double>> acc(k, std::vector<double>(bones, 0.0));
  for (int i = 0; i < n; ++i) {
    for (const auto& inf : g.vertexInfluences[i]) {
      for (const auto& s : rig.skeleton.skinning[i]) {
        acc[inf.node][s.bone] += inf.weight * s.weight;
      }
    }
  }
  for (int a = 0; a < k; ++a) {
    const double total = std::accumulate(acc[a].begin(), acc[a].end(), 0.0);
    for (int b = 0; b < bones; ++b) {
      if (acc[a][b] > 0.0) {
        g.nodeSkinning[a].push_back({b, acc[a][b] / total});
      }
    }
  }

  // Landmarks attach to the node geodesically closest to their nearest vertex.
  g.landmarkRest = rig.skeleton.restLandmarkPositions();
  for (const auto& p : g.landmarkRest) {
    int vertex = 0;
    double best = kInf;
    for (int i = 0; i < n; ++i) {
      const double d = (verts[i] - p).squaredNorm();
      if (d < best) {
        best = d;
        vertex = i;
      }
    }
    int node = 0;
    for (int a = 1; a < k; ++a) {
      if (dist[a][vertex] < dist[node][vertex]) {
        node = a;
      }
    }
    g.landmarkNode.push_back(node);
  }
  return g;
}

CharacterRig loadRigDirectory(const std::filesystem::path& directory) {
  const auto manifest = directory / "rig.json";
  std::ifstream in(manifest);
  if (!in) {
    throw DataError("cannot open " + manifest.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed rig manifest: " + std::string(e.what()));
  }
  RigidityTable table;
  GraphOptions options;
  std::filesystem::path meshFile;
  std::filesystem::path skeletonFile;
  std::filesystem::path rigidityFile;
  try {
    meshFile = directory / j.at("mesh").get<std::string>();
    skeletonFile = directory / j.at("skeleton").get<std::string>();
    rigidityFile = directory / j.at("rigidity").get<std::string>();
    for (const auto& [key, value] : j.at("rigidity_table").items()) {
      table[std::stoi(key)] = value.get<double>();
    }
    if (j.contains("graph")) {
      const auto& jg = j.at("graph");
      options.nodes = jg.value("nodes", options.nodes);
      options.influencesPerVertex = jg.value("influences", options.influencesPerVertex);
      options.neighborsPerNode = jg.value("neighbors", options.neighborsPerNode);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed rig manifest: " + std::string(e.what()));
  }
  auto rig = loadCharacter(meshFile, skeletonFile, rigidityFile, table);
  rig.graph = buildGraph(rig, options);
  return rig;
}

} // namespace hcap
