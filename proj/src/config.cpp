#include "hcap/config.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>

namespace hcap {

using json = nlohmann::json;

namespace {

void expectObject(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) {
    throw std::invalid_argument("config: '" + where + "' must be an object");
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys) {
      known = known || item.key() == k;
    }
    if (!known) {
      throw std::invalid_argument("config: unknown key '" + where + "." + item.key() + "'");
    }
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) {
    return;
  }
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config: '" + where + "." + key + "' has the wrong type");
  }
}

void readVec3(const json& j, const char* key, Vec3& out, const std::string& where) {
  if (!j.contains(key)) {
    return;
  }
  std::vector<double> v;
  read(j, key, v, where);
  if (v.size() != 3) {
    throw std::invalid_argument("config: '" + where + "." + key + "' needs 3 numbers");
  }
  out = Vec3(v[0], v[1], v[2]);
}

void readStage(const json& j, const char* key, StageConfig& s, const std::string& where) {
  if (!j.contains(key)) {
    return;
  }
  const std::string w = where + "." + key;
  const json& o = j.at(key);
  expectObject(o, w, {"iterations", "learning_rate", "final_decay"});
  read(o, "iterations", s.iterations, w);
  read(o, "learning_rate", s.learningRate, w);
  read(o, "final_decay", s.finalDecay, w);
}

void readFit(const json& j, FitConfig& f) {
  expectObject(j, "fit", {"pose", "deform", "adam", "warm_start", "deform_stage", "smoothing_kernel", "smoothing_sigma", "weighted_alignment", "weights"});
  readStage(j, "pose", f.pose, "fit");
  readStage(j, "deform", f.deform, "fit");
  if (j.contains("adam")) {
    const json& a = j.at("adam");
    expectObject(a, "fit.adam", {"beta1", "beta2", "epsilon"});
    read(a, "beta1", f.adam.beta1, "fit.adam");
    read(a, "beta2", f.adam.beta2, "fit.adam");
    read(a, "epsilon", f.adam.epsilon, "fit.adam");
  }
  read(j, "warm_start", f.warmStart, "fit");
  read(j, "deform_stage", f.deformStage, "fit");
  read(j, "smoothing_kernel", f.smoothingKernel, "fit");
  read(j, "smoothing_sigma", f.smoothingSigma, "fit");
  read(j, "weighted_alignment", f.weightedAlignment, "fit");
  if (j.contains("weights")) {
    const json& w = j.at("weights");
    const std::string where = "fit.weights";
    expectObject(w, where, {"keypoint", "limit", "silhouette", "keypoint_graph", "arap", "lambda_low"});
    read(w, "keypoint", f.weights.keypoint, where);
    read(w, "limit", f.weights.limit, where);
    read(w, "silhouette", f.weights.silhouette, where);
    read(w, "keypoint_graph", f.weights.keypointGraph, where);
    read(w, "arap", f.weights.arap, where);
    read(w, "lambda_low", f.weights.lambdaLow, where);
  }
}

void readSynth(const json& j, SynthConfig& s) {
  const std::string w = "synth";
  expectObject(j, w, {"seed", "cameras", "ring_radius", "height_jitter", "target_height", "width", "height", "focal", "frames", "amplitude_min", "amplitude_max", "period_min", "period_max", "root_position", "drift", "drift_period", "noise_px", "dropout", "deformations"});
  read(j, "seed", s.seed, w);
  read(j, "cameras", s.cameras, w);
  read(j, "ring_radius", s.ringRadius, w);
  read(j, "height_jitter", s.heightJitter, w);
  read(j, "target_height", s.targetHeight, w);
  read(j, "width", s.width, w);
  read(j, "height", s.height, w);
  read(j, "focal", s.focal, w);
  read(j, "frames", s.frames, w);
  read(j, "amplitude_min", s.amplitudeMin, w);
  read(j, "amplitude_max", s.amplitudeMax, w);
  read(j, "period_min", s.periodMin, w);
  read(j, "period_max", s.periodMax, w);
  readVec3(j, "root_position", s.rootPosition, w);
  readVec3(j, "drift", s.drift, w);
  read(j, "drift_period", s.driftPeriod, w);
  read(j, "noise_px", s.noisePx, w);
  read(j, "dropout", s.dropout, w);
  if (j.contains("deformations")) {
    const json& list = j.at("deformations");
    if (!list.is_array()) {
      throw std::invalid_argument("config: 'synth.deformations' must be an array");
    }
    s.deformations.clear();
    for (size_t i = 0; i < list.size(); ++i) {
      const std::string where = "synth.deformations[" + std::to_string(i) + "]";
      const json& d = list[i];
      expectObject(d, where, {"nodes", "anchor", "translation", "rotation", "profile", "period"});
      DeformationScript script;
      read(d, "nodes", script.nodes, where);
      read(d, "anchor", script.anchor, where);
      readVec3(d, "translation", script.translation, where);
      readVec3(d, "rotation", script.rotation, where);
      read(d, "profile", script.profile, where);
      read(d, "period", script.period, where);
      s.deformations.push_back(script);
    }
  }
}

json vec3Json(const Vec3& v) {
  return json::array({v[0], v[1], v[2]});
}

json stageJson(const StageConfig& s) {
  return {{"iterations", s.iterations}, {"learning_rate", s.learningRate}, {"final_decay", s.finalDecay}};
}

} // namespace

RunConfig parseRunConfig(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig c;
  expectObject(j, "config", {"fit", "synth"});
  if (j.contains("fit")) {
    readFit(j.at("fit"), c.fit);
  }
  if (j.contains("synth")) {
    readSynth(j.at("synth"), c.synth);
  }
  c.fit.validate();
  try {
    c.synth.validate();
  } catch (const DataError& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig loadRunConfig(const std::filesystem::path& path, std::string* text) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open config file " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  if (text) {
    *text = ss.str();
  }
  return parseRunConfig(ss.str());
}

std::string runConfigJson(const RunConfig& c) {
  json fit;
  fit["pose"] = stageJson(c.fit.pose);
  fit["deform"] = stageJson(c.fit.deform);
  fit["adam"] = {{"beta1", c.fit.adam.beta1}, {"beta2", c.fit.adam.beta2}, {"epsilon", c.fit.adam.epsilon}};
  fit["warm_start"] = c.fit.warmStart;
  fit["deform_stage"] = c.fit.deformStage;
  fit["smoothing_kernel"] = c.fit.smoothingKernel;
  fit["smoothing_sigma"] = c.fit.smoothingSigma;
  fit["weighted_alignment"] = c.fit.weightedAlignment;
  const auto& w = c.fit.weights;
  fit["weights"] = {{"keypoint", w.keypoint}, {"limit", w.limit}, {"silhouette", w.silhouette}, {"keypoint_graph", w.keypointGraph}, {"arap", w.arap}, {"lambda_low", w.lambdaLow}};

  const auto& s = c.synth;
  json synth = {
      {"seed", s.seed},
      {"cameras", s.cameras},
      {"ring_radius", s.ringRadius},
      {"height_jitter", s.heightJitter},
      {"target_height", s.targetHeight},
      {"width", s.width},
      {"height", s.height},
      {"focal", s.focal},
      {"frames", s.frames},
      {"amplitude_min", s.amplitudeMin},
      {"amplitude_max", s.amplitudeMax},
      {"period_min", s.periodMin},
      {"period_max", s.periodMax},
      {"root_position", vec3Json(s.rootPosition)},
      {"drift", vec3Json(s.drift)},
      {"drift_period", s.driftPeriod},
      {"noise_px", s.noisePx},
      {"dropout", s.dropout},
  };
  json defs = json::array();
  for (const auto& d : s.deformations) {
    defs.push_back({{"nodes", d.nodes}, {"anchor", d.anchor}, {"translation", vec3Json(d.translation)}, {"rotation", vec3Json(d.rotation)}, {"profile", d.profile}, {"period", d.period}});
  }
  synth["deformations"] = defs;
  return json{{"fit", fit}, {"synth", synth}}.dump(2);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hexDigest(std::uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void RunManifest::write(const std::filesystem::path& path) const {
  json j;
  j["command"] = command;
  j["version"] = kVersion;
  j["config_hash"] = configHash;
  j["seed"] = seed;
  json p = json::object();
  for (const auto& [k, v] : paths) {
    p[k] = v;
  }
  j["paths"] = p;
  json t = json::object();
  for (const auto& [k, v] : timings) {
    t[k] = v;
  }
  j["timing_s"] = t;
  json n = json::object();
  for (const auto& [k, v] : notes) {
    n[k] = v;
  }
  j["notes"] = n;
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

} // namespace hcap
