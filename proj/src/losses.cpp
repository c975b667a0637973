#include "hcap/losses.hpp"
#include "hcap/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace hcap {

std::vector<double> hierarchicalLambdas(const Skeleton& skeleton, double fraction, double low) {
  const auto depths = skeleton.landmarkDepths();
  const int maxDepth = depths.empty() ? 0 : *std::max_element(depths.begin(), depths.end());
  const double released = 1.0 + std::ceil(std::clamp(fraction, 0.0, 1.0) * maxDepth);
  std::vector<double> out;
  out.reserve(depths.size());
  for (int d : depths) {
    out.push_back(d <= released ? 1.0 : low);
  }
  return out;
}

RayBundle buildRays(const std::vector<Camera>& cameras, const std::vector<int>& views, const Detections& detections) {
  RayBundle rays;
  for (int c : views) {
    const auto& dets = detections.at(c);
    for (size_t m = 0; m < dets.size(); ++m) {
      if (dets[m].sigma <= 0.0) {
        continue;
      }
      rays.rays.push_back({cameras[c].origin, rayDirection(cameras[c], dets[m].p), dets[m].sigma, static_cast<int>(m)});
    }
  }
  return rays;
}

double keypointLoss(
    const Points& world,
    const std::vector<Camera>& cameras,
    const std::vector<int>& views,
    const Detections& detections,
    const std::vector<double>& lambdas,
    Points* grad,
    int* behind) {
  if (grad) {
    grad->assign(world.size(), Vec3::Zero());
  }
  int skipped = 0;
  double sum = 0.0;
  for (int c : views) {
    const Camera& cam = cameras[c];
    const auto& dets = detections.at(c);
    if (dets.size() != world.size()) {
      throw std::invalid_argument("detections of camera " + std::to_string(c) + " do not match landmark count");
    }
    for (size_t m = 0; m < world.size(); ++m) {
      const double w = (lambdas.empty() ? 1.0 : lambdas[m]) * dets[m].sigma;
      if (w == 0.0) {
        continue;
      }
      const Vec3 pc = cam.toCamera(world[m]);
      if (!(pc[2] > kNearDepth)) {
        ++skipped;
        continue;
      }
      const Vec2 r = Vec2(cam.fx * pc[0] / pc[2] + cam.cx, cam.fy * pc[1] / pc[2] + cam.cy) - dets[m].p;
      sum += w * r.squaredNorm();
      if (grad) {
        (*grad)[m] += 2.0 * w * projectJacobian(cam, world[m]).transpose() * r;
      }
    }
  }
  if (behind) {
    *behind = skipped;
  }
  return sum;
}

double limitLoss(const Eigen::VectorXd& theta, const std::vector<DofLimit>& limits, Eigen::VectorXd* grad) {
  if (static_cast<size_t>(theta.size()) != limits.size()) {
    throw std::invalid_argument("theta has " + std::to_string(theta.size()) + " entries, expected " + std::to_string(limits.size()));
  }
  if (grad) {
    *grad = Eigen::VectorXd::Zero(theta.size());
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    double excess = 0.0;
    if (theta[i] > limits[i].hi) {
      excess = theta[i] - limits[i].hi;
    } else if (theta[i] < limits[i].lo) {
      excess = theta[i] - limits[i].lo;
    }
    sum += excess * excess;
    if (grad) {
      (*grad)[i] = 2.0 * excess;
    }
  }
  return sum;
}

double arapLoss(const DeformGraph& graph, const GraphParams& params, Points* gradA, Points* gradT) {
  const int K = graph.nodeCount();
  if (params.nodeCount() != K) {
    throw std::invalid_argument("graph parameters do not match the graph");
  }
  if (gradA) {
    gradA->assign(K, Vec3::Zero());
  }
  if (gradT) {
    gradT->assign(K, Vec3::Zero());
  }
  double sum = 0.0;
  for (int k = 0; k < K; ++k) {
    const Mat3 R = eulerXYZ(params.A[k]);
    std::array<Mat3, 3> dR;
    if (gradA) {
      for (int c = 0; c < 3; ++c) {
        dR[c] = eulerXYZDerivative(params.A[k], c);
      }
    }
    for (size_t j = 0; j < graph.neighbors[k].size(); ++j) {
      const int l = graph.neighbors[k][j];
      const double u = graph.rigidity[k][j];
      const Vec3 e = graph.nodes[l] - graph.nodes[k];
      const Vec3 d = R * e + params.T[k] + graph.nodes[k] - (graph.nodes[l] + params.T[l]);
      Vec3 dpsi;
      for (int c = 0; c < 3; ++c) {
        sum += u * smoothAbs(d[c]);
        dpsi[c] = u * d[c] / std::sqrt(d[c] * d[c] + kArapEpsilon * kArapEpsilon);
      }
      if (gradT) {
        (*gradT)[k] += dpsi;
        (*gradT)[l] -= dpsi;
      }
      if (gradA) {
        for (int c = 0; c < 3; ++c) {
          (*gradA)[k][c] += dpsi.dot(dR[c] * e);
        }
      }
    }
  }
  return sum;
}

SilhouetteSelection selectSilhouette(
    const std::vector<Camera>& cameras,
    const std::vector<int>& views,
    const std::vector<SilhouetteObservation>& silhouettes,
    const Points& world,
    const std::vector<Eigen::Vector3i>& faces,
    const std::vector<MeshEdge>& edges,
    int jobs) {
  SilhouetteSelection sel;
  if (silhouettes.empty()) {
    return sel;
  }
  const Points normals = computeVertexNormals(world, faces);
  std::vector<SilhouetteSelection> perView(views.size());
  auto select = [&](size_t v) {
    const int c = views[v];
    const Camera& cam = cameras[c];
    const auto& sil = silhouettes.at(c);
    const auto raster = rasterize(cam, world, faces);
    const auto boundary = boundaryVertices(cam, world, faces, edges, normals, raster.depth);
    auto& out = perView[v];
    out.boundaryCount = static_cast<int>(boundary.size());
    for (const auto& b : boundary) {
      const Vec2 p = project(cam, world[b.vertex]);
      const Vec2 g(sampleBilinear(sil.gradX, p), sampleBilinear(sil.gradY, p));
      const int px = std::clamp(static_cast<int>(std::lround(p[0])), 0, sil.mask.width - 1);
      const int py = std::clamp(static_cast<int>(std::lround(p[1])), 0, sil.mask.height - 1);
      const double side = sil.mask.at(px, py) ? -1.0 : 1.0;
      if (side * g.dot(b.normal) > 0.0) {
        out.samples.push_back({c, b.vertex, bilinearCell(sil.dt.width, sil.dt.height, p)});
      }
    }
  };
  parallelFor(views.size(), jobs, select);
  for (auto& s : perView) {
    sel.boundaryCount += s.boundaryCount;
    sel.samples.insert(sel.samples.end(), s.samples.begin(), s.samples.end());
  }
  return sel;
}

double silhouetteLoss(
    const SilhouetteSelection& selection,
    const std::vector<Camera>& cameras,
    const std::vector<SilhouetteObservation>& silhouettes,
    const Points& world,
    Points* grad) {
  if (grad) {
    grad->assign(world.size(), Vec3::Zero());
  }
  double sum = 0.0;
  for (const auto& s : selection.samples) {
    const Camera& cam = cameras[s.view];
    const Vec3& v = world[s.vertex];
    const Vec3 pc = cam.toCamera(v);
    if (!(pc[2] > kNearDepth)) {
      continue;
    }
    const Vec2 p(cam.fx * pc[0] / pc[2] + cam.cx, cam.fy * pc[1] / pc[2] + cam.cy);
    Vec2 gd;
    const double d = sampleBilinear(silhouettes[s.view].dt, s.cell, p, &gd);
    sum += d * d;
    if (grad) {
      (*grad)[s.vertex] += 2.0 * d * projectJacobian(cam, v).transpose() * gd;
    }
  }
  return sum;
}

// --- parameter layout --------------------------------------------------------

Eigen::VectorXd flatten(const Points& points) {
  Eigen::VectorXd v(3 * points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    v.segment<3>(3 * i) = points[i];
  }
  return v;
}

Points unflatten(const Eigen::VectorXd& v) {
  Points out(v.size() / 3);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = v.segment<3>(3 * i);
  }
  return out;
}

ParamBlocks poseBlocks(const Eigen::VectorXd& theta, const Vec3& alpha) {
  ParamBlocks b;
  b.add("theta", theta);
  b.add("alpha", alpha);
  return b;
}

ParamBlocks graphBlocks(const GraphParams& params) {
  ParamBlocks b;
  b.add("A", flatten(params.A));
  b.add("T", flatten(params.T));
  return b;
}

GraphParams graphFromBlocks(const ParamBlocks& blocks) {
  return {unflatten(blocks["A"]), unflatten(blocks["T"])};
}

// --- stage A -------------------------------------------------------------------

KeypointObjective::KeypointObjective(std::shared_ptr<const FrameProblem> problem) : problem_(std::move(problem)) {
  const auto rays = buildRays(problem_->cameras, problem_->views, problem_->observations.keypoints);
  solver_ = std::make_shared<TranslationSolver>(rays, problem_->rig->skeleton.landmarkCount(), problem_->weightedAlignment);
}

Points KeypointObjective::worldLandmarks(const Eigen::VectorXd& theta, const Vec3& alpha, Vec3* t) const {
  const Mat3 rt = problem_->inputRotation().transpose();
  Points q = forwardLandmarks(problem_->rig->skeleton, theta, alpha);
  for (auto& p : q) {
    p = rt * p;
  }
  const Vec3 tr = solver_->solve(q);
  for (auto& p : q) {
    p += tr;
  }
  if (t) {
    *t = tr;
  }
  return q;
}

double KeypointObjective::evaluate(const ParamBlocks& params, BlockGradients* grad) const {
  const auto& theta = params["theta"];
  const Vec3 alpha = params["alpha"];
  const auto& p = *problem_;
  if (!grad) {
    const Points world = worldLandmarks(theta, alpha);
    return keypointLoss(world, p.cameras, p.views, p.observations.keypoints, lambdas_, nullptr, &behind_);
  }
  const auto jac = forwardLandmarksJacobian(p.rig->skeleton, theta, alpha);
  const Mat3& R = p.inputRotation();
  Points q(jac.positions.size());
  for (size_t m = 0; m < q.size(); ++m) {
    q[m] = R.transpose() * jac.positions[m];
  }
  const Vec3 t = solver_->solve(q);
  Points world = q;
  for (auto& w : world) {
    w += t;
  }
  Points gw;
  const double loss = keypointLoss(world, p.cameras, p.views, p.observations.keypoints, lambdas_, &gw, &behind_);
  Vec3 gt = Vec3::Zero();
  for (const auto& g : gw) {
    gt += g;
  }
  const Points viaT = solver_->vjp(gt);
  Eigen::VectorXd gcam(3 * q.size());
  for (size_t m = 0; m < q.size(); ++m) {
    gcam.segment<3>(3 * m) = R * (gw[m] + viaT[m]);
  }
  const Eigen::VectorXd g = jac.jacobian.transpose() * gcam;
  const auto dof = theta.size();
  (*grad)["theta"] = g.head(dof);
  (*grad)["alpha"] = g.tail(3);
  return loss;
}

double LimitObjective::evaluate(const ParamBlocks& params, BlockGradients* grad) const {
  if (!grad) {
    return limitLoss(params["theta"], limits_);
  }
  Eigen::VectorXd g;
  const double v = limitLoss(params["theta"], limits_, &g);
  (*grad)["theta"] = g;
  return v;
}

// --- stage B -------------------------------------------------------------------

FrozenPose freezePose(const CharacterRig& rig, const Eigen::VectorXd& theta, const Vec3& alpha, const Vec3& t, const Mat3& inputRotation) {
  FrozenPose f;
  f.theta = theta;
  f.alpha = alpha;
  f.t = t;
  f.nodes = nodeTransforms(rig, theta, alpha);
  f.blend = blendForPose(rig, f.nodes, inputRotation, t);
  return f;
}

SilhouetteObjective::SilhouetteObjective(std::shared_ptr<const FrameProblem> problem, std::shared_ptr<const FrozenPose> pose)
    : problem_(std::move(problem)), pose_(std::move(pose)) {}

void SilhouetteObjective::freeze(const ParamBlocks& params) {
  const auto& p = *problem_;
  const Points world = pose_->blend.apply(deform(*p.rig, graphFromBlocks(params)));
  selection_ = selectSilhouette(p.cameras, p.views, p.observations.silhouettes, world, p.rig->mesh.faces, p.rig->edges, p.jobs);
}

double SilhouetteObjective::evaluate(const ParamBlocks& params, BlockGradients* grad) const {
  const auto& p = *problem_;
  const GraphParams gp = graphFromBlocks(params);
  const Points world = pose_->blend.apply(deform(*p.rig, gp));
  if (!grad) {
    return silhouetteLoss(selection_, p.cameras, p.observations.silhouettes, world);
  }
  Points gw;
  const double loss = silhouetteLoss(selection_, p.cameras, p.observations.silhouettes, world, &gw);
  Points gy(gw.size());
  for (size_t i = 0; i < gw.size(); ++i) {
    gy[i] = pose_->blend.linear[i].transpose() * gw[i];
  }
  Points gA, gT;
  deformVjp(*p.rig, gp, gy, {}, gA, gT);
  (*grad)["A"] = flatten(gA);
  (*grad)["T"] = flatten(gT);
  return loss;
}

KeypointGraphObjective::KeypointGraphObjective(std::shared_ptr<const FrameProblem> problem, std::shared_ptr<const FrozenPose> pose)
    : problem_(std::move(problem)), pose_(std::move(pose)) {}

double KeypointGraphObjective::evaluate(const ParamBlocks& params, BlockGradients* grad) const {
  const auto& p = *problem_;
  const GraphParams gp = graphFromBlocks(params);
  const Points rest = deformLandmarksRest(*p.rig, gp);
  const auto& blend = pose_->blend;
  Points world(rest.size());
  for (size_t m = 0; m < rest.size(); ++m) {
    world[m] = blend.landmarkLinear[m] * rest[m] + blend.landmarkOffset[m];
  }
  if (!grad) {
    return keypointLoss(world, p.cameras, p.views, p.observations.keypoints, {});
  }
  Points gw;
  const double loss = keypointLoss(world, p.cameras, p.views, p.observations.keypoints, {}, &gw);
  Points gl(gw.size());
  for (size_t m = 0; m < gw.size(); ++m) {
    gl[m] = blend.landmarkLinear[m].transpose() * gw[m];
  }
  Points gA, gT;
  deformVjp(*p.rig, gp, {}, gl, gA, gT);
  (*grad)["A"] = flatten(gA);
  (*grad)["T"] = flatten(gT);
  return loss;
}

double ArapObjective::evaluate(const ParamBlocks& params, BlockGradients* grad) const {
  const GraphParams gp = graphFromBlocks(params);
  if (!grad) {
    return arapLoss(*graph_, gp);
  }
  Points gA, gT;
  const double v = arapLoss(*graph_, gp, &gA, &gT);
  (*grad)["A"] = flatten(gA);
  (*grad)["T"] = flatten(gT);
  return v;
}

PoseStage makePoseObjective(std::shared_ptr<const FrameProblem> problem, const LossWeights& weights) {
  PoseStage s;
  s.objective = std::make_shared<WeightedSum>("pose");
  s.keypoint = std::make_shared<KeypointObjective>(problem);
  s.objective->add(weights.keypoint, s.keypoint);
  s.objective->add(weights.limit, std::make_shared<LimitObjective>(problem->rig->skeleton));
  return s;
}

DeformStage makeDeformObjective(std::shared_ptr<const FrameProblem> problem, std::shared_ptr<const FrozenPose> pose, const LossWeights& weights) {
  DeformStage s;
  s.objective = std::make_shared<WeightedSum>("deform");
  s.silhouette = std::make_shared<SilhouetteObjective>(problem, pose);
  s.objective->add(weights.silhouette, s.silhouette);
  s.objective->add(weights.keypointGraph, std::make_shared<KeypointGraphObjective>(problem, pose));
  s.objective->add(weights.arap, std::make_shared<ArapObjective>(problem->rig->graph));
  return s;
}

} // namespace hcap
