#include "hcap/synthgen.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace hcap {

using json = nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mt19937_64 streamFor(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(tag),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
}

struct DofMotion {
  double center;
  double amplitude;
  double period;
  double phase;
};

std::vector<DofMotion> motionModel(const Skeleton& skeleton, const SynthConfig& config) {
  auto rng = streamFor(config.seed, 1);
  std::vector<DofMotion> out;
  for (const auto& lim : skeleton.limits) {
    DofMotion m;
    m.amplitude = std::min(uniform(rng, config.amplitudeMin, config.amplitudeMax), 0.5 * (lim.hi - lim.lo));
    m.center = std::clamp(0.0, lim.lo + m.amplitude, lim.hi - m.amplitude);
    m.period = uniform(rng, config.periodMin, config.periodMax);
    m.phase = uniform(rng, 0.0, kTwoPi);
    out.push_back(m);
  }
  return out;
}

} // namespace

double DeformationScript::strength(int frame, int frames) const {
  if (profile == "constant") {
    return 1.0;
  }
  if (profile == "ramp") {
    return frames > 1 ? static_cast<double>(frame) / (frames - 1) : 1.0;
  }
  if (profile == "sine") {
    return std::sin(kTwoPi * frame / period);
  }
  throw DataError("unknown deformation profile '" + profile + "'");
}

void SynthConfig::validate() const {
  if (cameras < 2) {
    throw DataError("synthetic rig needs at least 2 cameras");
  }
  if (frames < 1 || width < 2 || height < 2 || !(focal > 0.0) || !(ringRadius > 0.0)) {
    throw DataError("invalid synthetic camera or frame settings");
  }
  if (amplitudeMin < 0.0 || amplitudeMax < amplitudeMin || !(periodMin > 0.0) || periodMax < periodMin) {
    throw DataError("invalid motion ranges");
  }
  if (noisePx < 0.0 || dropout < 0.0 || dropout > 1.0) {
    throw DataError("invalid keypoint noise settings");
  }
  for (const auto& d : deformations) {
    if (d.nodes.empty() && d.anchor.empty()) {
      throw DataError("deformation script selects no nodes");
    }
    d.strength(0, frames);
  }
}

std::vector<Camera> ringCameras(const SynthConfig& config, std::uint64_t seed) {
  auto rng = streamFor(seed, 2);
  const Vec3 target(0.0, config.targetHeight, 0.0);
  std::vector<Camera> cams;
  for (int c = 0; c < config.cameras; ++c) {
    const double phi = kTwoPi * c / config.cameras;
    const double jitter = uniform(rng, -config.heightJitter, config.heightJitter);
    const double h = config.targetHeight + (c == 0 ? 0.0 : jitter);
    const Vec3 origin(config.ringRadius * std::sin(phi), h, config.ringRadius * std::cos(phi));
    cams.push_back(Camera::lookAt(origin, target, Vec3::UnitY(), config.focal, config.width, config.height));
  }
  return cams;
}

std::vector<int> scriptNodes(const CharacterRig& rig, const DeformationScript& script) {
  std::vector<int> nodes = script.nodes;
  if (!script.anchor.empty()) {
    nodes.push_back(rig.graph.landmarkNode[rig.skeleton.landmarkIndex(script.anchor)]);
  }
  for (int k : nodes) {
    if (k < 0 || k >= rig.graph.nodeCount()) {
      throw DataError("deformation script node " + std::to_string(k) + " out of range");
    }
  }
  return nodes;
}

FrameGroundTruth groundTruthFrame(const CharacterRig& rig, const SynthConfig& config, const std::vector<Camera>& cameras, int frame) {
  const auto motion = motionModel(rig.skeleton, config);
  FrameGroundTruth gt;
  gt.pose = PoseParams::rest(rig.skeleton);
  for (size_t d = 0; d < motion.size(); ++d) {
    const auto& m = motion[d];
    gt.pose.theta[d] = m.center + m.amplitude * std::sin(kTwoPi * frame / m.period + m.phase);
  }
  const double w = kTwoPi * frame / config.driftPeriod;
  gt.pose.t = config.rootPosition + Vec3(config.drift[0] * std::sin(w), config.drift[1] * std::sin(w + 2.0), config.drift[2] * std::sin(0.7 * w + 1.0));
  gt.graph = GraphParams::zero(rig.graph.nodeCount());
  for (const auto& script : config.deformations) {
    const double s = script.strength(frame, config.frames);
    for (int k : scriptNodes(rig, script)) {
      gt.graph.A[k] += s * script.rotation;
      gt.graph.T[k] += s * script.translation;
    }
  }
  gt.landmarks = toWorld(forwardLandmarks(rig.skeleton, gt.pose.theta, gt.pose.alpha), cameras[0].R, gt.pose.t);
  return gt;
}

Image<double> roundToFloat(const Image<double>& image) {
  Image<double> out = image;
  for (auto& v : out.data) {
    v = static_cast<float>(v);
  }
  return out;
}

FrameObservations renderObservations(
    const CharacterRig& rig,
    const std::vector<Camera>& cameras,
    int inputCamera,
    const FrameGroundTruth& truth,
    double noisePx,
    double dropout,
    std::uint64_t seed) {
  auto rng = std::mt19937_64(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto nodes = nodeTransforms(rig, truth.pose.theta, truth.pose.alpha);
  const auto mesh = evaluateMesh(rig, truth.graph, nodes, cameras[inputCamera].R, truth.pose.t);
  FrameObservations obs;
  for (const auto& cam : cameras) {
    std::vector<Keypoint2D> kps;
    for (const auto& p : truth.landmarks) {
      Keypoint2D k;
      const double nx = noise(rng);
      const double ny = noise(rng);
      const double drop = std::generate_canonical<double, 53>(rng);
      if (cam.toCamera(p)[2] > kNearDepth) {
        k.p = project(cam, p) + noisePx * Vec2(nx, ny);
        k.sigma = drop < dropout ? 0.0 : 1.0;
      }
      kps.push_back(k);
    }
    obs.keypoints.push_back(std::move(kps));
    const Mask mask = rasterizeMask(cam, mesh.world, rig.mesh.faces);
    obs.silhouettes.push_back(makeSilhouette(mask, roundToFloat(distanceTransform(mask).dt)));
  }
  return obs;
}

Dataset generate(const CharacterRig& rig, const SynthConfig& config) {
  config.validate();
  Dataset ds;
  ds.cameras = ringCameras(config, config.seed);
  ds.meta.frames = config.frames;
  ds.meta.inputCamera = 0;
  for (const auto& l : rig.skeleton.landmarks) {
    ds.meta.landmarks.push_back(l.name);
  }
  ds.meta.eval = rig.skeleton.eval;
  for (int f = 0; f < config.frames; ++f) {
    ds.frameIds.push_back(f);
    ds.truth.push_back(groundTruthFrame(rig, config, ds.cameras, f));
    auto rng = streamFor(config.seed, 3, static_cast<std::uint64_t>(f));
    ds.frames.push_back(renderObservations(rig, ds.cameras, 0, ds.truth.back(), config.noisePx, config.dropout, rng()));
  }
  return ds;
}

// --- files -------------------------------------------------------------------

std::string frameName(int frame) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", frame);
  return buf;
}

namespace {

std::string formatDouble(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json readJson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

} // namespace

void writeParamFile(const std::filesystem::path& path, const std::vector<std::pair<std::string, Eigen::VectorXd>>& entries) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  for (const auto& [key, v] : entries) {
    out << key << ' ' << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out << ' ' << formatDouble(v[i]);
    }
    out << '\n';
  }
}

ParamFile readParamFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open parameter file " + path.string());
  }
  ParamFile file;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string key;
    long count = 0;
    if (!(ss >> key)) {
      continue;
    }
    if (!(ss >> count) || count < 0) {
      throw DataError("malformed entry '" + key + "' in " + path.string());
    }
    Eigen::VectorXd v(count);
    for (long i = 0; i < count; ++i) {
      if (!(ss >> v[i])) {
        throw DataError("entry '" + key + "' in " + path.string() + " has fewer than " + std::to_string(count) + " values");
      }
    }
    file[key] = v;
  }
  return file;
}

std::vector<std::pair<std::string, Eigen::VectorXd>> frameParamEntries(const PoseParams& pose, const GraphParams& graph, const Points& landmarks) {
  return {
      {"theta", pose.theta},
      {"alpha", pose.alpha},
      {"t", pose.t},
      {"A", flatten(graph.A)},
      {"T", flatten(graph.T)},
      {"landmarks", flatten(landmarks)},
  };
}

FrameGroundTruth frameFromParams(const ParamFile& file) {
  auto get = [&](const std::string& key, long size = -1) {
    const auto it = file.find(key);
    if (it == file.end()) {
      throw DataError("parameter file lacks '" + key + "'");
    }
    if (size >= 0 && it->second.size() != size) {
      throw DataError("parameter '" + key + "' has wrong size");
    }
    return it->second;
  };
  FrameGroundTruth f;
  f.pose.theta = get("theta");
  f.pose.alpha = get("alpha", 3);
  f.pose.t = get("t", 3);
  f.graph.A = unflatten(get("A"));
  f.graph.T = unflatten(get("T"));
  f.landmarks = unflatten(get("landmarks"));
  return f;
}

void writeKeypoints(const std::filesystem::path& path, const std::vector<Keypoint2D>& keypoints) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  for (const auto& k : keypoints) {
    out << formatDouble(k.p[0]) << ' ' << formatDouble(k.p[1]) << ' ' << formatDouble(k.sigma) << '\n';
  }
}

std::vector<Keypoint2D> readKeypoints(const std::filesystem::path& path, int expected) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open keypoint file " + path.string());
  }
  std::vector<Keypoint2D> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    Keypoint2D k;
    if (!(ss >> k.p[0])) {
      continue;
    }
    if (!(ss >> k.p[1] >> k.sigma) || !k.p.allFinite()) {
      throw DataError("malformed keypoint row in " + path.string());
    }
    k.sigma = gateConfidence(std::clamp(k.sigma, 0.0, 1.0));
    out.push_back(k);
  }
  if (static_cast<int>(out.size()) != expected) {
    throw DataError(path.string() + " has " + std::to_string(out.size()) + " keypoints, expected " + std::to_string(expected));
  }
  return out;
}

void writeDataset(const std::filesystem::path& dir, const Dataset& ds, const std::string& configJson) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::remove_all(dir / "frames");
  fs::remove_all(dir / "gt");
  writeCameras(dir / "cameras.json", ds.cameras);
  json meta;
  meta["frames"] = ds.meta.frames;
  meta["cameras"] = ds.cameras.size();
  meta["input_camera"] = ds.meta.inputCamera;
  meta["landmarks"] = ds.meta.landmarks;
  meta["evaluation"] = {{"root", ds.meta.eval.root}, {"parents", ds.meta.eval.parents}, {"mask", ds.meta.eval.mask}};
  meta["config"] = configJson.empty() ? json::object() : json::parse(configJson);
  std::ofstream(dir / "meta.json") << meta.dump(1) << '\n';
  for (size_t f = 0; f < ds.frames.size(); ++f) {
    const auto frameDir = dir / "frames" / frameName(ds.frameIds[f]);
    fs::create_directories(frameDir);
    for (size_t c = 0; c < ds.cameras.size(); ++c) {
      const std::string cc = c < 10 ? "0" + std::to_string(c) : std::to_string(c);
      writeKeypoints(frameDir / ("kp_" + cc + ".txt"), ds.frames[f].keypoints[c]);
      writePgm(frameDir / ("mask_" + cc + ".pgm"), ds.frames[f].silhouettes[c].mask);
      writeDistanceImage(frameDir / ("dt_" + cc + ".bin"), ds.frames[f].silhouettes[c].dt);
    }
    if (f < ds.truth.size()) {
      fs::create_directories(dir / "gt");
      const auto& t = ds.truth[f];
      writeParamFile(dir / "gt" / (frameName(ds.frameIds[f]) + ".txt"), frameParamEntries(t.pose, t.graph, t.landmarks));
    }
  }
}

DatasetMeta readDatasetMeta(const std::filesystem::path& dir) {
  const json j = readJson(dir / "meta.json");
  DatasetMeta m;
  try {
    m.frames = j.at("frames").get<int>();
    m.inputCamera = j.value("input_camera", 0);
    m.landmarks = j.at("landmarks").get<std::vector<std::string>>();
    const auto& e = j.at("evaluation");
    m.eval.root = e.at("root").get<int>();
    m.eval.parents = e.at("parents").get<std::vector<int>>();
    m.eval.mask = e.at("mask").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw DataError("malformed meta.json: " + std::string(e.what()));
  }
  const int n = static_cast<int>(m.landmarks.size());
  if (m.eval.root < 0 || m.eval.root >= n || static_cast<int>(m.eval.parents.size()) != n) {
    throw DataError("meta.json evaluation layout inconsistent with landmarks");
  }
  return m;
}

Dataset readDataset(const std::filesystem::path& dir, int first, int last, bool withTruth) {
  Dataset ds;
  ds.meta = readDatasetMeta(dir);
  ds.cameras = readCameras(dir / "cameras.json");
  if (ds.meta.inputCamera < 0 || ds.meta.inputCamera >= static_cast<int>(ds.cameras.size())) {
    throw DataError("input camera out of range");
  }
  const int end = last < 0 ? ds.meta.frames - 1 : last;
  if (first < 0 || end >= ds.meta.frames || first > end) {
    throw DataError("frame range " + std::to_string(first) + ".." + std::to_string(end) + " outside dataset of " + std::to_string(ds.meta.frames) + " frames");
  }
  const int m = static_cast<int>(ds.meta.landmarks.size());
  for (int f = first; f <= end; ++f) {
    const auto frameDir = dir / "frames" / frameName(f);
    FrameObservations obs;
    for (size_t c = 0; c < ds.cameras.size(); ++c) {
      const std::string cc = c < 10 ? "0" + std::to_string(c) : std::to_string(c);
      obs.keypoints.push_back(readKeypoints(frameDir / ("kp_" + cc + ".txt"), m));
      Mask mask = readPgm(frameDir / ("mask_" + cc + ".pgm"));
      Image<double> dt = readDistanceImage(frameDir / ("dt_" + cc + ".bin"));
      if (mask.width != ds.cameras[c].width || mask.height != ds.cameras[c].height || dt.width != mask.width || dt.height != mask.height) {
        throw DataError("image size mismatch in " + frameDir.string() + " camera " + cc);
      }
      obs.silhouettes.push_back(makeSilhouette(std::move(mask), std::move(dt)));
    }
    ds.frameIds.push_back(f);
    ds.frames.push_back(std::move(obs));
    if (withTruth) {
      ds.truth.push_back(frameFromParams(readParamFile(dir / "gt" / (frameName(f) + ".txt"))));
    }
  }
  return ds;
}

} // namespace hcap
