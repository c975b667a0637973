#include "hcap/cli.hpp"
#include "hcap/config.hpp"
#include "hcap/fitter.hpp"
#include "hcap/metrics.hpp"
#include "hcap/synthgen.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#ifndef HCAP_DEFAULT_RIG
#define HCAP_DEFAULT_RIG "assets/capsule_person"
#endif

namespace hcap {

namespace fs = std::filesystem;

std::vector<int> parseIndexList(const std::string& text) {
  std::set<int> out;
  auto number = [&](const std::string& s) {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw std::invalid_argument("bad index '" + s + "' in list '" + text + "'");
    }
    return std::stoi(s);
  };
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.insert(number(item));
      continue;
    }
    const int a = number(item.substr(0, dots));
    const int b = number(item.substr(dots + 2));
    if (a > b) {
      throw std::invalid_argument("empty range '" + item + "'");
    }
    for (int i = a; i <= b; ++i) {
      out.insert(i);
    }
  }
  if (out.empty()) {
    throw std::invalid_argument("empty index list");
  }
  return {out.begin(), out.end()};
}

std::pair<int, int> parseFrameRange(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    const auto v = parseIndexList(text);
    if (v.size() != 1) {
      throw std::invalid_argument("bad frame range '" + text + "'");
    }
    return {v[0], v[0]};
  }
  const auto v = parseIndexList(text);
  if (static_cast<int>(v.size()) != v.back() - v.front() + 1 || text.find(',') != std::string::npos) {
    throw std::invalid_argument("bad frame range '" + text + "'");
  }
  return {v.front(), v.back()};
}

std::vector<GradcheckRow> gradcheckSuite(const CharacterRig& rig, std::uint64_t seed, int configs, const FdOptions& options, const LossWeights& weights) {
  std::vector<GradcheckRow> rows;
  for (int i = 0; i < configs; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    SynthConfig sc;
    sc.seed = rng();
    sc.frames = 1;
    sc.cameras = 2 + static_cast<int>(rng() % 6);
    sc.width = 160;
    sc.height = 160;
    sc.focal = 230.0;
    const Dataset ds = generate(rig, sc);

    auto problem = std::make_shared<FrameProblem>();
    problem->rig = &rig;
    problem->cameras = ds.cameras;
    for (int c = 0; c < sc.cameras; ++c) {
      problem->views.push_back(c);
    }
    problem->observations = ds.frames[0];

    PoseParams pose = ds.truth[0].pose;
    for (Eigen::Index d = 0; d < pose.theta.size(); ++d) {
      pose.theta[d] += 0.1 * unit(rng);
    }
    pose.alpha = 0.1 * Vec3(unit(rng), unit(rng), unit(rng));

    auto poseStage = makePoseObjective(problem, weights);
    poseStage.keypoint->setLambdas(hierarchicalLambdas(rig.skeleton, 0.5 * (unit(rng) + 1.0), weights.lambdaLow));
    FdOptions o = options;
    o.seed = rng();
    const auto poseReport = fdCheck(*poseStage.objective, poseBlocks(pose.theta, pose.alpha), o);
    for (const auto& [block, err] : poseReport.error) {
      rows.push_back({i, "pose", block, err});
    }

    poseStage.keypoint->worldLandmarks(pose.theta, pose.alpha, &pose.t);
    auto frozen = std::make_shared<FrozenPose>(freezePose(rig, pose.theta, pose.alpha, pose.t, problem->inputRotation()));
    auto deformStage = makeDeformObjective(problem, frozen, weights);
    GraphParams graph = GraphParams::zero(rig.graph.nodeCount());
    for (int k = 0; k < graph.nodeCount(); ++k) {
      graph.A[k] = 0.05 * Vec3(unit(rng), unit(rng), unit(rng));
      graph.T[k] = 0.02 * Vec3(unit(rng), unit(rng), unit(rng));
    }
    const auto deformReport = fdCheck(*deformStage.objective, graphBlocks(graph), o);
    for (const auto& [block, err] : deformReport.error) {
      rows.push_back({i, "deform", block, err});
    }
  }
  return rows;
}

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct ConfigSource {
  RunConfig config;
  std::string hash;
};

ConfigSource loadConfigOrDefault(const std::string& path) {
  ConfigSource s;
  if (!path.empty()) {
    s.config = loadRunConfig(path);
  }
  s.hash = hexDigest(fnv1a(runConfigJson(s.config)));
  return s;
}

std::string cameraName(size_t c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02zu", c);
  return buf;
}

std::vector<int> listFrames(const fs::path& dir, const std::string& extension) {
  if (!fs::is_directory(dir)) {
    throw DataError("missing directory " + dir.string());
  }
  std::vector<int> frames;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.path().extension() != extension || name.size() != 4 + extension.size()) {
      continue;
    }
    const auto stem = e.path().stem().string();
    if (std::all_of(stem.begin(), stem.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      frames.push_back(std::stoi(stem));
    }
  }
  std::sort(frames.begin(), frames.end());
  if (frames.empty()) {
    throw DataError("no frames found in " + dir.string());
  }
  return frames;
}

std::string csvNumber(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::string out;
  std::string rig = HCAP_DEFAULT_RIG;
};

int cmdSynth(const SynthArgs& a) {
  const auto t0 = Clock::now();
  const auto src = loadConfigOrDefault(a.config);
  const CharacterRig rig = loadRigDirectory(a.rig);
  const auto t1 = Clock::now();
  const Dataset ds = generate(rig, src.config.synth);
  const double genTime = secondsSince(t1);
  const auto t2 = Clock::now();
  writeDataset(a.out, ds, runConfigJson(src.config));
  RunManifest m;
  m.command = "synth";
  m.configHash = src.hash;
  m.seed = src.config.synth.seed;
  m.paths = {{"rig", a.rig}, {"config", a.config}, {"out", a.out}};
  m.timings = {{"load", secondsSince(t0) - secondsSince(t1)}, {"generate", genTime}, {"write", secondsSince(t2)}};
  m.write(fs::path(a.out) / "manifest.json");
  std::cerr << "synth: wrote " << ds.frames.size() << " frames x " << ds.cameras.size() << " cameras to " << a.out << "\n";
  return 0;
}

// --- fit -------------------------------------------------------------------

struct FitArgs {
  std::string dataset;
  std::string rig = HCAP_DEFAULT_RIG;
  std::string config;
  std::string out;
  std::string cameras;
  std::string frames;
  int jobs = 1;
};

int cmdFit(const FitArgs& a) {
  if (a.jobs < 1) {
    throw std::invalid_argument("--jobs must be at least 1");
  }
  const auto t0 = Clock::now();
  const auto src = loadConfigOrDefault(a.config);
  const CharacterRig rig = loadRigDirectory(a.rig);
  int first = 0;
  int last = -1;
  if (!a.frames.empty()) {
    std::tie(first, last) = parseFrameRange(a.frames);
  }
  const Dataset ds = readDataset(a.dataset, first, last, false);
  if (ds.meta.landmarks.size() != rig.skeleton.landmarks.size()) {
    throw DataError("dataset has " + std::to_string(ds.meta.landmarks.size()) + " landmarks, rig has " + std::to_string(rig.skeleton.landmarks.size()));
  }
  SequenceInput input;
  input.rig = &rig;
  input.cameras = ds.cameras;
  input.inputCamera = ds.meta.inputCamera;
  input.frameIds = ds.frameIds;
  input.frames = ds.frames;
  if (a.cameras.empty()) {
    for (size_t c = 0; c < ds.cameras.size(); ++c) {
      input.views.push_back(static_cast<int>(c));
    }
  } else {
    input.views = parseIndexList(a.cameras);
    if (input.views.back() >= static_cast<int>(ds.cameras.size())) {
      throw std::invalid_argument("--cameras selects camera " + std::to_string(input.views.back()) + " but the dataset has " + std::to_string(ds.cameras.size()));
    }
  }
  const double loadTime = secondsSince(t0);

  const auto t1 = Clock::now();
  const auto results = fitSequence(input, src.config.fit, a.jobs);
  const double fitTime = secondsSince(t1);

  const auto t2 = Clock::now();
  const fs::path out(a.out);
  for (const char* sub : {"params", "meshes", "smoothed"}) {
    fs::remove_all(out / sub);
    fs::create_directories(out / sub);
  }
  std::ofstream trace(out / "trace.csv");
  std::ofstream summary(out / "frames.csv");
  trace << "frame,stage,iteration,term,value\n";
  summary << "frame,failed,pose_loss,deform_loss,error\n";
  int failed = 0;
  for (const auto& r : results) {
    const std::string name = frameName(r.frame);
    auto entries = frameParamEntries(r.pose, r.graph, r.landmarks);
    entries.push_back({"failed", Eigen::VectorXd::Constant(1, r.failed ? 1.0 : 0.0)});
    writeParamFile(out / "params" / (name + ".txt"), entries);
    writeObj(out / "meshes" / (name + ".obj"), r.mesh.world, rig.mesh.faces);
    writeObj(out / "smoothed" / (name + ".obj"), r.smoothed, rig.mesh.faces);
    for (const auto& row : r.trace) {
      const std::vector<std::string> terms = row.stage == "pose" ? std::vector<std::string>{"keypoint", "limit"} : std::vector<std::string>{"silhouette", "keypoint_graph", "arap"};
      trace << r.frame << ',' << row.stage << ',' << row.iteration << ",total," << csvNumber(row.total) << '\n';
      for (size_t c = 0; c < row.components.size() && c < terms.size(); ++c) {
        trace << r.frame << ',' << row.stage << ',' << row.iteration << ',' << terms[c] << ',' << csvNumber(row.components[c]) << '\n';
      }
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    summary << r.frame << ',' << (r.failed ? 1 : 0) << ',' << csvNumber(r.poseLoss) << ',' << csvNumber(r.deformLoss) << ',' << err << '\n';
    if (r.failed) {
      ++failed;
      std::cerr << "fit: frame " << r.frame << " failed: " << r.error << "\n";
    }
  }
  RunManifest m;
  m.command = "fit";
  m.configHash = src.hash;
  m.seed = src.config.synth.seed;
  m.paths = {{"dataset", a.dataset}, {"rig", a.rig}, {"config", a.config}, {"out", a.out}};
  m.timings = {{"load", loadTime}, {"fit", fitTime}, {"write", secondsSince(t2)}};
  std::string views;
  for (int v : input.views) {
    views += (views.empty() ? "" : ",") + std::to_string(v);
  }
  m.notes = {{"cameras", views}, {"frames", std::to_string(results.size())}, {"failed_frames", std::to_string(failed)}, {"jobs", std::to_string(a.jobs)}};
  m.write(out / "manifest.json");
  if (failed == static_cast<int>(results.size())) {
    throw NumericalError("every frame failed to fit");
  }
  std::cerr << "fit: " << results.size() << " frames (" << failed << " failed) in " << fitTime << " s\n";
  return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  int inputView = -1;
  std::string out;
  bool smoothed = false;
};

int cmdEval(const EvalArgs& a) {
  const auto t0 = Clock::now();
  const fs::path pred(a.pred);
  const fs::path gt(a.gt);
  const DatasetMeta meta = readDatasetMeta(gt);
  const auto cameras = readCameras(gt / "cameras.json");
  const int inputView = a.inputView < 0 ? meta.inputCamera : a.inputView;
  if (inputView >= static_cast<int>(cameras.size())) {
    throw std::invalid_argument("--input-view " + std::to_string(inputView) + " out of range for " + std::to_string(cameras.size()) + " cameras");
  }
  const auto frames = listFrames(pred / "params", ".txt");
  JointSequence predJoints;
  JointSequence gtJoints;
  std::vector<IoUFamily> ious;
  const fs::path meshDir = pred / (a.smoothed ? "smoothed" : "meshes");
  for (int f : frames) {
    const std::string name = frameName(f);
    const auto p = frameFromParams(readParamFile(pred / "params" / (name + ".txt")));
    const auto g = frameFromParams(readParamFile(gt / "gt" / (name + ".txt")));
    if (p.landmarks.size() != meta.landmarks.size() || g.landmarks.size() != meta.landmarks.size()) {
      throw DataError("frame " + name + ": landmark count differs from dataset meta");
    }
    predJoints.push_back(p.landmarks);
    gtJoints.push_back(g.landmarks);
    const TemplateMesh mesh = readObj(meshDir / (name + ".obj"));
    std::vector<Mask> masks;
    for (size_t c = 0; c < cameras.size(); ++c) {
      masks.push_back(readPgm(gt / "frames" / name / ("mask_" + cameraName(c) + ".pgm")));
    }
    ious.push_back(iouFamily(mesh.vertices, mesh.faces, cameras, masks, inputView));
  }
  const auto& ev = meta.eval;
  int degenerate = 0;
  const JointSequence rescaled = rescaleBones(predJoints, gtJoints, ev.parents, ev.root, &degenerate);
  if (degenerate > 0) {
    std::cerr << "eval: " << degenerate << " zero-length predicted bones inherited their parent direction\n";
  }
  const double gle = globalLocalizationError(predJoints, gtJoints, ev.root);
  const double pck = pck3d(rescaled, gtJoints, ev.mask, ev.root);
  const double auc = pckAuc(rescaled, gtJoints, ev.mask, ev.root);
  const double mpjpe = mpjpeProcrustes(rescaled, gtJoints, ev.mask);
  double amv = 0.0;
  double rv = 0.0;
  double sv = 0.0;
  for (const auto& i : ious) {
    amv += i.amv;
    rv += i.rv;
    sv += i.sv;
  }
  const double n = static_cast<double>(ious.size());
  const fs::path out = a.out.empty() ? pred / "metrics.csv" : fs::path(a.out);
  if (out.has_parent_path()) {
    fs::create_directories(out.parent_path());
  }
  std::ofstream csv(out);
  if (!csv) {
    throw DataError("cannot write " + out.string());
  }
  csv << "gle_mm,pck3d,auc,mpjpe_mm,amviou,rviou,sviou\n";
  csv << csvNumber(gle) << ',' << csvNumber(pck) << ',' << csvNumber(auc) << ',' << csvNumber(mpjpe) << ',' << csvNumber(amv / n) << ','
      << csvNumber(rv / n) << ',' << csvNumber(sv / n) << '\n';

  fs::path perFrame = out;
  perFrame.replace_filename(out.stem().string() + "_per_frame.csv");
  std::ofstream pf(perFrame);
  pf << "frame,gle_mm,pck3d,mpjpe_mm,amviou,rviou,sviou\n";
  for (size_t i = 0; i < frames.size(); ++i) {
    const JointSequence p1{predJoints[i]};
    const JointSequence r1{rescaled[i]};
    const JointSequence g1{gtJoints[i]};
    pf << frames[i] << ',' << csvNumber(globalLocalizationError(p1, g1, ev.root)) << ',' << csvNumber(pck3d(r1, g1, ev.mask, ev.root)) << ','
       << csvNumber(mpjpeProcrustes(r1, g1, ev.mask)) << ',' << csvNumber(ious[i].amv) << ',' << csvNumber(ious[i].rv) << ',' << csvNumber(ious[i].sv) << '\n';
  }
  RunManifest m;
  m.command = "eval";
  m.paths = {{"pred", a.pred}, {"gt", a.gt}, {"metrics", out.string()}};
  m.timings = {{"eval", secondsSince(t0)}};
  m.notes = {{"input_view", std::to_string(inputView)}, {"frames", std::to_string(frames.size())}, {"meshes", a.smoothed ? "smoothed" : "per-frame"}};
  fs::path manifest = out;
  manifest.replace_filename(out.stem().string() + "_manifest.json");
  m.write(manifest);
  std::cout << "gle_mm=" << gle << " pck3d=" << pck << " auc=" << auc << " mpjpe_mm=" << mpjpe << " amviou=" << amv / n << " rviou=" << rv / n << " sviou=" << sv / n << "\n";
  return 0;
}

// --- export ----------------------------------------------------------------

struct ExportArgs {
  std::string pred;
  std::string out;
};

int cmdExport(const ExportArgs& a) {
  const auto t0 = Clock::now();
  const fs::path pred(a.pred);
  const fs::path out(a.out);
  const auto frames = listFrames(pred / "meshes", ".obj");
  fs::create_directories(out);
  for (int f : frames) {
    const std::string name = frameName(f);
    const TemplateMesh mesh = readObj(pred / "meshes" / (name + ".obj"));
    writeObj(out / (name + ".obj"), mesh.vertices, mesh.faces);
    const fs::path smooth = pred / "smoothed" / (name + ".obj");
    if (!fs::exists(smooth)) {
      throw DataError("missing smoothed mesh " + smooth.string());
    }
    const TemplateMesh s = readObj(smooth);
    writeObj(out / (name + "_smoothed.obj"), s.vertices, s.faces);
  }
  RunManifest m;
  m.command = "export";
  m.paths = {{"pred", a.pred}, {"out", a.out}};
  m.timings = {{"export", secondsSince(t0)}};
  m.notes = {{"frames", std::to_string(frames.size())}};
  m.write(out / "manifest.json");
  std::cerr << "export: " << frames.size() << " frames to " << a.out << "\n";
  return 0;
}

// --- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  std::string rig = HCAP_DEFAULT_RIG;
  std::uint64_t seed = 1;
  int configs = 20;
  double step = 1e-8;
  double tolerance = 1e-4;
  std::string config;
  std::string out;
};

int cmdGradcheck(const GradcheckArgs& a) {
  if (a.configs < 1 || !(a.step > 0.0) || !(a.tolerance > 0.0)) {
    throw std::invalid_argument("gradcheck needs configs >= 1 and positive step and tolerance");
  }
  const auto t0 = Clock::now();
  const auto src = loadConfigOrDefault(a.config);
  const CharacterRig rig = loadRigDirectory(a.rig);
  FdOptions opts;
  opts.step = a.step;
  const auto rows = gradcheckSuite(rig, a.seed, a.configs, opts, src.config.fit.weights);
  double worst = 0.0;
  std::map<std::string, double> perBlock;
  for (const auto& r : rows) {
    worst = std::max(worst, r.error);
    auto& w = perBlock[r.objective + "/" + r.block];
    w = std::max(w, r.error);
  }
  std::ostream* report = &std::cout;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) {
      throw DataError("cannot write " + a.out);
    }
    report = &file;
  }
  *report << "config,objective,block,max_rel_error\n";
  for (const auto& r : rows) {
    *report << r.config << ',' << r.objective << ',' << r.block << ',' << csvNumber(r.error) << '\n';
  }
  for (const auto& [k, v] : perBlock) {
    std::cerr << "gradcheck: " << k << " worst " << v << (v < a.tolerance ? " ok" : " FAIL") << "\n";
  }
  std::cerr << "gradcheck: " << a.configs << " configurations in " << secondsSince(t0) << " s\n";
  if (!(worst < a.tolerance)) {
    std::cerr << "gradcheck: worst relative error " << worst << " exceeds " << a.tolerance << "\n";
    return 4;
  }
  return 0;
}

} // namespace

int runCli(int argc, const char* const* argv) {
  CLI::App app{"hcap: multi-view human template fitting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("hcap ") + kVersion);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic multi-view dataset");
  s->add_option("--config", synth.config, "Config JSON (defaults when omitted)");
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--rig", synth.rig, "Rig directory")->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit pose and deformation to a dataset");
  f->add_option("--dataset", fit.dataset, "Dataset directory")->required();
  f->add_option("--rig", fit.rig, "Rig directory")->capture_default_str();
  f->add_option("--config", fit.config, "Config JSON");
  f->add_option("--out", fit.out, "Output directory")->required();
  f->add_option("--cameras", fit.cameras, "Supervising cameras, e.g. 0..6 or 0,3");
  f->add_option("--frames", fit.frames, "Inclusive frame range A..B");
  f->add_option("--jobs", fit.jobs, "Threads for per-camera work or independent frames")->capture_default_str();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Compute metrics of a fit against ground truth");
  e->add_option("--pred", eval.pred, "Fit output directory")->required();
  e->add_option("--gt", eval.gt, "Dataset directory with ground truth")->required();
  e->add_option("--input-view", eval.inputView, "Input camera index (default: dataset's)");
  e->add_option("--out", eval.out, "Metrics CSV path (default PRED/metrics.csv)");
  e->add_flag("--smoothed", eval.smoothed, "Evaluate the temporally smoothed meshes");

  ExportArgs exp;
  auto* x = app.add_subcommand("export", "Write per-frame OBJ meshes");
  x->add_option("--pred", exp.pred, "Fit output directory")->required();
  x->add_option("--out", exp.out, "Output directory")->required();

  GradcheckArgs gc;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference check of both stage objectives");
  g->add_option("--rig", gc.rig, "Rig directory")->capture_default_str();
  g->add_option("--seed", gc.seed, "Seed")->capture_default_str();
  g->add_option("--configs", gc.configs, "Random configurations")->capture_default_str();
  g->add_option("--step", gc.step, "Central difference step")->capture_default_str();
  g->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();
  g->add_option("--config", gc.config, "Config JSON (loss weights)");
  g->add_option("--out", gc.out, "CSV report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*s) {
      return cmdSynth(synth);
    }
    if (*f) {
      return cmdFit(fit);
    }
    if (*e) {
      return cmdEval(eval);
    }
    if (*x) {
      return cmdExport(exp);
    }
    if (*g) {
      return cmdGradcheck(gc);
    }
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return 3;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return 4;
  } catch (const std::exception& err) {
    std::cerr << "failure: " << err.what() << "\n";
    return 4;
  }
  return 2;
}

} // namespace hcap
