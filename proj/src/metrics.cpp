#include "hcap/metrics.hpp"

#include <Eigen/Geometry>

#include <stdexcept>

namespace hcap {

namespace {

void checkFrames(const JointSequence& pred, const JointSequence& gt) {
  if (pred.size() != gt.size()) {
    throw DataError("frame count mismatch: " + std::to_string(pred.size()) + " predicted vs " + std::to_string(gt.size()) + " ground truth");
  }
  for (size_t f = 0; f < pred.size(); ++f) {
    if (pred[f].size() != gt[f].size()) {
      throw DataError("joint count mismatch in frame " + std::to_string(f));
    }
  }
}

std::vector<int> hierarchyOrder(const std::vector<int>& parents, int root) {
  std::vector<int> order{root};
  for (size_t head = 0; head < order.size(); ++head) {
    for (size_t j = 0; j < parents.size(); ++j) {
      if (parents[j] == order[head]) {
        order.push_back(static_cast<int>(j));
      }
    }
  }
  return order;
}

} // namespace

JointSequence rescaleBones(
    const JointSequence& pred,
    const JointSequence& gt,
    const std::vector<int>& parents,
    int root,
    int* degenerate) {
  checkFrames(pred, gt);
  const auto order = hierarchyOrder(parents, root);
  int flagged = 0;
  JointSequence out = pred;
  for (size_t f = 0; f < pred.size(); ++f) {
    std::vector<Vec3> dir(pred[f].size(), Vec3::Zero());
    for (size_t o = 1; o < order.size(); ++o) {
      const int j = order[o];
      const int p = parents[j];
      Vec3 d = pred[f][j] - pred[f][p];
      if (d.norm() < 1e-12) {
        ++flagged;
        d = dir[p];
      } else {
        d.normalize();
      }
      dir[j] = d;
      out[f][j] = out[f][p] + (gt[f][j] - gt[f][p]).norm() * d;
    }
  }
  if (degenerate) {
    *degenerate = flagged;
  }
  return out;
}

double globalLocalizationError(const JointSequence& pred, const JointSequence& gt, int root) {
  checkFrames(pred, gt);
  if (pred.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (size_t f = 0; f < pred.size(); ++f) {
    sum += (pred[f][root] - gt[f][root]).norm();
  }
  return 1000.0 * sum / static_cast<double>(pred.size());
}

double pck3d(const JointSequence& pred, const JointSequence& gt, const std::vector<int>& mask, int root, double thresholdMm) {
  checkFrames(pred, gt);
  size_t hit = 0;
  size_t total = 0;
  for (size_t f = 0; f < pred.size(); ++f) {
    for (int j : mask) {
      const Vec3 e = (pred[f][j] - pred[f][root]) - (gt[f][j] - gt[f][root]);
      hit += 1000.0 * e.norm() <= thresholdMm ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 100.0 : 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

double pckAuc(const JointSequence& pred, const JointSequence& gt, const std::vector<int>& mask, int root) {
  double sum = 0.0;
  int count = 0;
  for (int t = 0; t <= 150; t += 5) {
    sum += pck3d(pred, gt, mask, root, t);
    ++count;
  }
  return sum / count;
}

Similarity procrustes(const Points& source, const Points& target) {
  if (source.size() != target.size() || source.empty()) {
    throw std::invalid_argument("procrustes needs two non-empty point sets of equal size");
  }
  Eigen::Matrix3Xd src(3, source.size());
  Eigen::Matrix3Xd dst(3, target.size());
  for (size_t i = 0; i < source.size(); ++i) {
    src.col(i) = source[i];
    dst.col(i) = target[i];
  }
  const Eigen::Matrix4d T = Eigen::umeyama(src, dst, true);
  Similarity s;
  const Mat3 sr = T.topLeftCorner<3, 3>();
  s.scale = std::cbrt(sr.determinant());
  s.rotation = sr / s.scale;
  s.translation = T.topRightCorner<3, 1>();
  return s;
}

double mpjpeProcrustes(const JointSequence& pred, const JointSequence& gt, const std::vector<int>& mask) {
  checkFrames(pred, gt);
  double sum = 0.0;
  size_t total = 0;
  for (size_t f = 0; f < pred.size(); ++f) {
    Points p, g;
    for (int j : mask) {
      p.push_back(pred[f][j]);
      g.push_back(gt[f][j]);
    }
    const Similarity s = procrustes(p, g);
    for (size_t i = 0; i < p.size(); ++i) {
      sum += (s.apply(p[i]) - g[i]).norm();
      ++total;
    }
  }
  return total == 0 ? 0.0 : 1000.0 * sum / static_cast<double>(total);
}

double maskIoU(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height) {
    throw DataError("mask size mismatch");
  }
  size_t inter = 0;
  size_t uni = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const bool x = a.data[i] != 0;
    const bool y = b.data[i] != 0;
    inter += x && y;
    uni += x || y;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

IoUFamily combineIoU(const std::vector<double>& perView, int inputView) {
  if (perView.empty() || inputView < 0 || inputView >= static_cast<int>(perView.size())) {
    throw std::invalid_argument("input view out of range");
  }
  IoUFamily out;
  out.perView = perView;
  double all = 0.0;
  double others = 0.0;
  for (size_t c = 0; c < perView.size(); ++c) {
    all += perView[c];
    if (static_cast<int>(c) != inputView) {
      others += perView[c];
    }
  }
  out.amv = all / static_cast<double>(perView.size());
  out.rv = perView.size() > 1 ? others / static_cast<double>(perView.size() - 1) : 0.0;
  out.sv = perView[inputView];
  return out;
}

IoUFamily iouFamily(
    const Points& world,
    const std::vector<Eigen::Vector3i>& faces,
    const std::vector<Camera>& cameras,
    const std::vector<Mask>& gtMasks,
    int inputView) {
  if (gtMasks.size() != cameras.size()) {
    throw DataError("mask count does not match camera count");
  }
  std::vector<double> per;
  for (size_t c = 0; c < cameras.size(); ++c) {
    per.push_back(maskIoU(rasterizeMask(cameras[c], world, faces), gtMasks[c]));
  }
  return combineIoU(per, inputView);
}

} // namespace hcap
