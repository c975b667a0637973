#pragma once

#include "hcap/align.hpp"
#include "hcap/camproj.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace hcap::test {

// O(n^2) nearest contour pixel, contour defined independently of contourPixels()
inline Image<double> bruteForceDt(const Mask& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<std::pair<int, int>> contour;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) {
        continue;
      }
      const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k], ny = y + dy[k];
        if (nx >= 0 && ny >= 0 && nx < w && ny < h && !mask.at(nx, ny)) {
          contour.emplace_back(x, y);
          break;
        }
      }
    }
  }
  Image<double> dt(w, h, std::numeric_limits<double>::infinity());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      long best = std::numeric_limits<long>::max();
      for (const auto& [cx, cy] : contour) {
        best = std::min<long>(best, (cx - x) * (cx - x) + (cy - y) * (cy - y));
      }
      dt.at(x, y) = std::sqrt(static_cast<double>(best));
    }
  }
  return dt;
}

inline Mask randomMask(std::mt19937_64& rng, int w, int h, double density) {
  std::bernoulli_distribution b(density);
  Mask m(w, h, 0);
  for (auto& v : m.data) {
    v = b(rng) ? 1 : 0;
  }
  return m;
}

// steepest descent with exact line search on the alignment residual; the
// gradient comes from central differences of the residual itself
inline Vec3 minimizeResidualNumerically(const Points& q, const RayBundle& rays, Vec3 t, int maxIterations = 20000) {
  auto f = [&](const Vec3& x) { return alignmentResidual(q, x, rays); };
  for (int it = 0; it < maxIterations; ++it) {
    const double h = 1e-4;
    Vec3 g;
    for (int c = 0; c < 3; ++c) {
      Vec3 e = Vec3::Zero();
      e[c] = h;
      g[c] = (f(t + e) - f(t - e)) / (2 * h);
    }
    if (g.norm() < 1e-13) {
      break;
    }
    // f(t - s g) = a s^2 + b s + c
    const double s1 = 1e-3 / g.norm();
    const double f0 = f(t), fp = f(t - s1 * g), fm = f(t + s1 * g);
    const double a = (fp + fm - 2 * f0) / (2 * s1 * s1);
    const double b = (fp - fm) / (2 * s1);
    if (!(a > 0.0)) {
      break;
    }
    const Vec3 next = t - (-b / (2 * a)) * g;
    if ((next - t).norm() < 1e-15) {
      break;
    }
    t = next;
  }
  return t;
}

} // namespace hcap::test
