#include "hcap/fitter.hpp"
#include "hcap/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace hcap {

void FitConfig::validate() const {
  if (pose.iterations < 1 || deform.iterations < 1) {
    throw std::invalid_argument("iterations per stage must be at least 1");
  }
  if (!(pose.learningRate > 0.0) || !(deform.learningRate > 0.0) || !(pose.finalDecay > 0.0) || !(deform.finalDecay > 0.0)) {
    throw std::invalid_argument("learning rates and decays must be positive");
  }
  if (smoothingKernel < 1 || smoothingKernel % 2 == 0) {
    throw std::invalid_argument("smoothing kernel size must be odd and positive");
  }
  if (!(smoothingSigma > 0.0)) {
    throw std::invalid_argument("smoothing sigma must be positive");
  }
  for (double w : {weights.keypoint, weights.limit, weights.silhouette, weights.keypointGraph, weights.arap, weights.lambdaLow}) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("loss weights must be non-negative");
    }
  }
}

void Adam::step(ParamBlocks& params, const BlockGradients& grad, double learningRate) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, t_);
  const double c2 = 1.0 - std::pow(config_.beta2, t_);
  for (const auto& b : params.all()) {
    const auto it = grad.find(b.name);
    if (it == grad.end()) {
      continue;
    }
    auto& m = m_[b.name];
    auto& v = v_[b.name];
    if (m.size() == 0) {
      m = Eigen::VectorXd::Zero(b.value.size());
      v = Eigen::VectorXd::Zero(b.value.size());
    }
    auto& x = params[b.name];
    const Eigen::VectorXd& g = it->second;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (!b.active[i]) {
        continue;
      }
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      x[i] -= learningRate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

namespace {

double scheduledRate(const StageConfig& stage, int iteration) {
  if (stage.iterations <= 1) {
    return stage.learningRate;
  }
  return stage.learningRate * std::pow(stage.finalDecay, static_cast<double>(iteration) / (stage.iterations - 1));
}

void checkFinite(double value, const std::string& stage, int iteration) {
  if (!std::isfinite(value)) {
    throw NumericalError("non-finite " + stage + " loss at iteration " + std::to_string(iteration));
  }
}

void checkFinite(const BlockGradients& grad, const std::string& stage, int iteration) {
  for (const auto& [name, g] : grad) {
    if (!g.allFinite()) {
      throw NumericalError("non-finite " + stage + " gradient (" + name + ") at iteration " + std::to_string(iteration));
    }
  }
}

} // namespace

PoseFit fitPose(std::shared_ptr<const FrameProblem> problem, const FitConfig& config, const PoseParams& init) {
  const Skeleton& skeleton = problem->rig->skeleton;
  if (init.theta.size() != skeleton.dofCount()) {
    throw std::invalid_argument("initial theta has wrong size");
  }
  auto stage = makePoseObjective(problem, config.weights);
  const std::vector<double> ones(skeleton.landmarkCount(), 1.0);
  ParamBlocks params = poseBlocks(init.theta, init.alpha);
  Adam adam(config.adam);
  PoseFit out;
  ParamBlocks best = params;
  double bestLoss = std::numeric_limits<double>::infinity();
  const int n = config.pose.iterations;
  for (int it = 0; it <= n; ++it) {
    stage.keypoint->setLambdas(ones);
    const auto comps = stage.objective->components(params);
    const double loss = config.weights.keypoint * comps[0] + config.weights.limit * comps[1];
    checkFinite(loss, "pose", it);
    out.trace.push_back({"pose", it, loss, comps});
    if (it == 0) {
      out.initialLoss = loss;
    }
    if (loss < bestLoss) {
      bestLoss = loss;
      best = params;
    }
    if (it == n) {
      break;
    }
    stage.keypoint->setLambdas(hierarchicalLambdas(skeleton, static_cast<double>(it) / n, config.weights.lambdaLow));
    const auto grad = gradient(*stage.objective, params);
    checkFinite(grad, "pose", it);
    adam.step(params, grad, scheduledRate(config.pose, it));
  }
  stage.keypoint->setLambdas(ones);
  out.pose.theta = best["theta"];
  out.pose.alpha = best["alpha"];
  out.landmarks = stage.keypoint->worldLandmarks(out.pose.theta, out.pose.alpha, &out.pose.t);
  out.loss = bestLoss;
  return out;
}

DeformFit fitDeform(
    std::shared_ptr<const FrameProblem> problem,
    const PoseParams& pose,
    const FitConfig& config,
    const GraphParams& init,
    int jobs) {
  auto local = std::make_shared<FrameProblem>(*problem);
  local->jobs = jobs;
  const CharacterRig& rig = *problem->rig;
  auto frozen = std::make_shared<FrozenPose>(freezePose(rig, pose.theta, pose.alpha, pose.t, problem->inputRotation()));
  auto stage = makeDeformObjective(local, frozen, config.weights);
  ParamBlocks params = graphBlocks(init);
  Adam adam(config.adam);
  DeformFit out;
  ParamBlocks best = params;
  double bestLoss = std::numeric_limits<double>::infinity();
  const int n = config.deform.iterations;
  for (int it = 0; it <= n; ++it) {
    stage.objective->freeze(params);
    if (it == 0) {
      out.silhouetteEmpty = stage.silhouette->selection().empty();
    }
    const auto comps = stage.objective->components(params);
    double loss = 0.0;
    for (size_t c = 0; c < comps.size(); ++c) {
      loss += stage.objective->terms()[c].first * comps[c];
    }
    checkFinite(loss, "deform", it);
    out.trace.push_back({"deform", it, loss, comps});
    if (it == 0) {
      out.initialLoss = loss;
    }
    if (loss < bestLoss) {
      bestLoss = loss;
      best = params;
    }
    if (it == n) {
      break;
    }
    const auto grad = gradient(*stage.objective, params);
    checkFinite(grad, "deform", it);
    adam.step(params, grad, scheduledRate(config.deform, it));
  }
  out.graph = graphFromBlocks(best);
  out.loss = bestLoss;
  return out;
}

std::vector<double> smoothingWeights(int frame, int count, int kernelSize, double sigma, int* first) {
  const int half = kernelSize / 2;
  const int lo = std::max(0, frame - half);
  const int hi = std::min(count - 1, frame + half);
  std::vector<double> w;
  double sum = 0.0;
  for (int f = lo; f <= hi; ++f) {
    const double k = f - frame;
    w.push_back(std::exp(-k * k / (2.0 * sigma * sigma)));
    sum += w.back();
  }
  for (auto& x : w) {
    x /= sum;
  }
  if (first) {
    *first = lo;
  }
  return w;
}

std::vector<Points> smoothSequence(const std::vector<Points>& frames, int kernelSize, double sigma) {
  if (frames.empty()) {
    throw std::invalid_argument("cannot smooth an empty sequence");
  }
  if (kernelSize < 1 || kernelSize % 2 == 0 || !(sigma > 0.0)) {
    throw std::invalid_argument("smoothing kernel must have odd size and positive sigma");
  }
  const int count = static_cast<int>(frames.size());
  std::vector<Points> out(frames.size());
  for (int f = 0; f < count; ++f) {
    int first = 0;
    const auto w = smoothingWeights(f, count, kernelSize, sigma, &first);
    out[f].assign(frames[f].size(), Vec3::Zero());
    for (size_t k = 0; k < w.size(); ++k) {
      const Points& src = frames[first + k];
      if (src.size() != frames[f].size()) {
        throw std::invalid_argument("frames have different vertex counts");
      }
      for (size_t i = 0; i < src.size(); ++i) {
        out[f][i] += w[k] * src[i];
      }
    }
  }
  return out;
}

FrameResult fitFrame(const SequenceInput& input, size_t index, const FitConfig& config, const PoseParams& initPose, const GraphParams& initGraph, int jobs) {
  auto problem = std::make_shared<FrameProblem>();
  problem->rig = input.rig;
  problem->cameras = input.cameras;
  problem->views = input.views;
  problem->inputCamera = input.inputCamera;
  problem->observations = input.frames[index];
  problem->weightedAlignment = config.weightedAlignment;
  problem->jobs = jobs;

  FrameResult r;
  r.frame = input.frameIds.empty() ? static_cast<int>(index) : input.frameIds[index];
  const PoseFit pose = fitPose(problem, config, initPose);
  r.pose = pose.pose;
  r.landmarks = pose.landmarks;
  r.poseLoss = pose.loss;
  r.trace = pose.trace;
  r.graph = initGraph;
  if (config.deformStage) {
    const DeformFit deform = fitDeform(problem, pose.pose, config, initGraph, jobs);
    r.graph = deform.graph;
    r.deformLoss = deform.loss;
    r.trace.insert(r.trace.end(), deform.trace.begin(), deform.trace.end());
  }
  const auto nodes = nodeTransforms(*input.rig, r.pose.theta, r.pose.alpha);
  r.mesh = evaluateMesh(*input.rig, r.graph, nodes, input.cameras[input.inputCamera].R, r.pose.t);
  return r;
}

namespace {

FrameResult failedFrame(const SequenceInput& input, size_t index, const std::string& error) {
  FrameResult r;
  r.frame = input.frameIds.empty() ? static_cast<int>(index) : input.frameIds[index];
  r.pose = PoseParams::rest(input.rig->skeleton);
  r.graph = GraphParams::zero(input.rig->graph.nodeCount());
  r.failed = true;
  r.error = error;
  const auto nodes = nodeTransforms(*input.rig, r.pose.theta, r.pose.alpha);
  r.mesh = evaluateMesh(*input.rig, r.graph, nodes, input.cameras[input.inputCamera].R, r.pose.t);
  r.landmarks = toWorld(forwardLandmarks(input.rig->skeleton, r.pose.theta, r.pose.alpha), input.cameras[input.inputCamera].R, r.pose.t);
  return r;
}

} // namespace

std::vector<FrameResult> fitSequence(const SequenceInput& input, const FitConfig& config, int jobs) {
  config.validate();
  if (input.frames.empty()) {
    throw std::invalid_argument("sequence has no frames");
  }
  const PoseParams rest = PoseParams::rest(input.rig->skeleton);
  const GraphParams zero = GraphParams::zero(input.rig->graph.nodeCount());
  std::vector<FrameResult> results(input.frames.size());
  if (!config.warmStart) {
    parallelFor(input.frames.size(), jobs, [&](size_t f) {
      try {
        results[f] = fitFrame(input, f, config, rest, zero, 1);
      } catch (const std::exception& e) {
        results[f] = failedFrame(input, f, e.what());
      }
    });
  } else {
    PoseParams pose = rest;
    GraphParams graph = zero;
    for (size_t f = 0; f < input.frames.size(); ++f) {
      try {
        results[f] = fitFrame(input, f, config, pose, graph, jobs);
        pose = results[f].pose;
        graph = results[f].graph;
      } catch (const std::exception& e) {
        results[f] = failedFrame(input, f, e.what());
        pose = rest;
        graph = zero;
      }
    }
  }
  std::vector<Points> meshes;
  for (const auto& r : results) {
    meshes.push_back(r.mesh.world);
  }
  const auto smoothed = smoothSequence(meshes, config.smoothingKernel, config.smoothingSigma);
  for (size_t f = 0; f < results.size(); ++f) {
    results[f].smoothed = smoothed[f];
  }
  return results;
}

} // namespace hcap
