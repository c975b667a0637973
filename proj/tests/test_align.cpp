#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace hcap;
using namespace hcap::test;

namespace {

struct Instance {
  Points q;
  RayBundle rays;
  Vec3 tTrue;
};

// landmarks seen from `cameras` ring cameras with pixel noise, random confidences
Instance randomInstance(std::mt19937_64& rng, int cameras, int landmarks, double noisePx) {
  Instance in;
  in.tTrue = randomVec(rng, 0.5);
  for (int m = 0; m < landmarks; ++m) {
    in.q.push_back(randomVec(rng, 0.8));
  }
  std::normal_distribution<double> noise(0.0, noisePx);
  std::uniform_real_distribution<double> conf(0.4, 1.0);
  for (int c = 0; c < cameras; ++c) {
    const double a = 2 * M_PI * c / cameras + 0.2 * randomVec(rng)[0];
    const Vec3 o(3.5 * std::sin(a), 0.5 * randomVec(rng)[1], 3.5 * std::cos(a));
    const auto cam = Camera::lookAt(o, Vec3::Zero(), Vec3::UnitY(), 400.0, 320, 320);
    for (int m = 0; m < landmarks; ++m) {
      const Vec2 p = project(cam, in.q[m] + in.tTrue) + Vec2(noise(rng), noise(rng));
      in.rays.rays.push_back({cam.origin, rayDirection(cam, p), conf(rng), m});
    }
  }
  return in;
}

} // namespace

TEST_SUITE("align") {

TEST_CASE("ray through the principal point is the optical axis") {
  const auto cam = Camera::fromParameters(Mat3::Identity(), Vec3::Zero(), 500, 500, 100, 80, 200, 160);
  CHECK((rayDirection(cam, Vec2(100, 80)) - Vec3(0, 0, 1)).norm() < 1e-15);
  CHECK((rayDirection(cam, Vec2(600, 80)) - Vec3(1, 0, 1).normalized()).norm() < 1e-15);
}

TEST_CASE("project after rayDirection closes the loop") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 o = randomVec(rng, 4.0);
    const auto cam = Camera::lookAt(o, randomVec(rng, 0.5), Vec3::UnitY(), 300 + 200 * std::abs(randomVec(rng)[0]), 320, 240);
    const Vec2 p(std::uniform_real_distribution<double>(0, 320)(rng), std::uniform_real_distribution<double>(0, 240)(rng));
    const Vec3 d = rayDirection(cam, p);
    CHECK(d.norm() == doctest::Approx(1.0));
    for (double s : {0.3, 2.0, 17.0}) {
      CHECK((project(cam, o + s * d) - p).norm() < 1e-6);
    }
  }
}

TEST_CASE("exact ray intersection at (0,0,5)") {
  RayBundle rays;
  rays.rays.push_back({Vec3(0, 0, 0), Vec3(0, 0, 1), 1.0, 0});
  rays.rays.push_back({Vec3(5, 0, 5), Vec3(-1, 0, 0), 1.0, 0});
  const Points q{Vec3::Zero()};
  const Vec3 t = solveTranslation(q, rays);
  CHECK((t - Vec3(0, 0, 5)).norm() < 1e-12);
  CHECK(alignmentResidual(q, t, rays) < 1e-24);
}

TEST_CASE("parallel rays are degenerate") {
  RayBundle rays;
  for (int i = 0; i < 4; ++i) {
    rays.rays.push_back({Vec3(i, 2.0 * i, 0), Vec3(0, 0, 1), 1.0, i % 2});
  }
  CHECK_THROWS_AS(solveTranslation(Points(2, Vec3::Zero()), rays), DegenerateRaysError);
}

TEST_CASE("closed form matches the numeric minimizer on a 3-camera 5-landmark instance") {
  std::mt19937_64 rng(2);
  const auto in = randomInstance(rng, 3, 5, 1.0);
  const Vec3 t = solveTranslation(in.q, in.rays);
  const Vec3 n = minimizeResidualNumerically(in.q, in.rays, Vec3::Zero());
  CHECK((t - n).norm() < 1e-6);
}

TEST_CASE("residual examples") {
  RayBundle one;
  one.rays.push_back({Vec3(1, 1, 1), Vec3(0, 1, 0), 1.0, 0});
  const Points q{Vec3::Zero()};
  CHECK(alignmentResidual(q, Vec3(1, 7, 1) + Vec3(0.3, 0, 0.4), one) == doctest::Approx(0.25));
  std::mt19937_64 rng(3);
  const auto in = randomInstance(rng, 4, 6, 2.0);
  const Vec3 t = randomVec(rng);
  double oracle = 0.0;
  for (const auto& r : in.rays.rays) {
    const Vec3 x = in.q[r.landmark] + t - r.origin;
    const Vec3 perp = x - x.dot(r.direction) * r.direction;
    oracle += r.sigma * perp.squaredNorm();
  }
  CHECK(alignmentResidual(in.q, t, in.rays) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("solution zeroes the residual gradient") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = randomInstance(rng, 2 + trial % 6, 3 + trial % 19, 1.5);
    const Vec3 t = solveTranslation(in.q, in.rays);
    Vec3 g = Vec3::Zero();
    double scale = 0.0;
    for (const auto& r : in.rays.rays) {
      const Mat3 p = Mat3::Identity() - r.direction * r.direction.transpose();
      g += 2 * r.sigma * p * (in.q[r.landmark] + t - r.origin);
      scale += r.sigma * (in.q[r.landmark] + t - r.origin).norm();
    }
    CHECK(g.norm() < 1e-8 * scale);
  }
}

TEST_CASE("t is affine in the landmarks") {
  std::mt19937_64 rng(5);
  const auto in = randomInstance(rng, 4, 8, 1.0);
  Points q2;
  for (size_t m = 0; m < in.q.size(); ++m) {
    q2.push_back(randomVec(rng));
  }
  const TranslationSolver solver(in.rays, 8);
  const double a = 1.7, b = -0.7;
  Points mix;
  for (size_t m = 0; m < in.q.size(); ++m) {
    mix.push_back(a * in.q[m] + b * q2[m]);
  }
  CHECK((solver.solve(mix) - (a * solver.solve(in.q) + b * solver.solve(q2))).norm() < 1e-12);
}

TEST_CASE("dt/dQ matches central differences") {
  std::mt19937_64 rng(6);
  const auto in = randomInstance(rng, 3, 6, 1.0);
  const TranslationSolver solver(in.rays, 6);
  const double h = 1e-5;
  for (int m = 0; m < 6; ++m) {
    Mat3 fd;
    for (int c = 0; c < 3; ++c) {
      Points qp = in.q, qm = in.q;
      qp[m][c] += h;
      qm[m][c] -= h;
      fd.col(c) = (solver.solve(qp) - solver.solve(qm)) / (2 * h);
    }
    const Mat3 j = solver.jacobian(m);
    CHECK(gradientError(Eigen::Map<const Eigen::VectorXd>(j.data(), 9), Eigen::Map<const Eigen::VectorXd>(fd.data(), 9)) < 1e-6);
  }
  // vjp is the transpose
  const Vec3 gt = randomVec(rng);
  const auto v = solver.vjp(gt);
  for (int m = 0; m < 6; ++m) {
    CHECK((v[m] - solver.jacobian(m).transpose() * gt).norm() < 1e-12);
  }
}

TEST_CASE("unweighted mode ignores confidences") {
  std::mt19937_64 rng(7);
  auto in = randomInstance(rng, 3, 5, 1.0);
  auto flat = in.rays;
  for (auto& r : flat.rays) {
    r.sigma = 1.0;
  }
  CHECK((solveTranslation(in.q, in.rays, false) - solveTranslation(in.q, flat, true)).norm() < 1e-12);
}

}
