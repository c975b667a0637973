#include "oracles.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <fstream>
#include <set>

using namespace hcap;
using namespace hcap::test;

namespace {

// camera at the origin looking down +z
Camera canonical(int w = 64, int h = 48, double f = 50.0) {
  return Camera::fromParameters(Mat3::Identity(), Vec3::Zero(), f, f, 0.5 * (w - 1), 0.5 * (h - 1), w, h);
}

int count(const Mask& m) {
  int n = 0;
  for (auto v : m.data) {
    n += v;
  }
  return n;
}

} // namespace

TEST_SUITE("camproj") {

TEST_CASE("projection examples") {
  const auto cam = canonical();
  CHECK((project(cam, Vec3(0, 0, 3)) - Vec2(cam.cx, cam.cy)).norm() < 1e-15);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = Camera::lookAt(randomVec(rng, 5.0), Vec3::Zero(), Vec3::UnitY(), 300, 200, 100);
    const Vec3 x = randomVec(rng, 0.5);
    const Eigen::Vector4d e = c.E * x.homogeneous();
    const Vec2 oracle(e[0] / e[2], e[1] / e[2]);
    CHECK((project(c, x) - oracle).norm() < 1e-9);
  }
  CHECK_THROWS_AS(project(cam, Vec3(0, 0, -1)), BehindCameraError);
}

TEST_CASE("projection Jacobian matches central differences") {
  std::mt19937_64 rng(2);
  const auto c = Camera::lookAt(Vec3(1, 2, 4), Vec3::Zero(), Vec3::UnitY(), 300, 200, 100);
  const Vec3 x = randomVec(rng, 0.5);
  Eigen::Matrix<double, 2, 3> fd;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e[k] = 1e-6;
    fd.col(k) = (project(c, x + e) - project(c, x - e)) / 2e-6;
  }
  CHECK((projectJacobian(c, x) - fd).norm() < 1e-6);
}

TEST_CASE("camera consistency check") {
  auto c = canonical();
  CHECK_NOTHROW(validateCamera(c));
  c.E(0, 3) += 1.0;
  CHECK_THROWS_AS(validateCamera(c), DataError);
}

TEST_CASE("mesh behind the camera renders nothing") {
  const auto cam = canonical();
  const auto sphere = sphereMesh(0.5, 8, 12, Vec3(0, 0, -3));
  CHECK(count(rasterizeMask(cam, sphere.vertices, sphere.faces)) == 0);
  CHECK(boundaryVertices(cam, sphere.vertices, sphere.faces, computeVertexNormals(sphere.vertices, sphere.faces)).empty());
}

TEST_CASE("square quad facing the camera fills the predicted rectangle") {
  const auto cam = canonical(100, 80, 60.0);
  const double z = 4.0;
  const Points quad{Vec3(-1.0, -0.7, z), Vec3(1.3, -0.7, z), Vec3(1.3, 0.9, z), Vec3(-1.0, 0.9, z)};
  const std::vector<Eigen::Vector3i> faces{{0, 1, 2}, {0, 2, 3}};
  const auto mask = rasterizeMask(cam, quad, faces);
  const Vec2 lo = project(cam, quad[0]);
  const Vec2 hi = project(cam, quad[2]);
  int inside = 0, border = 0;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const bool in = x > lo[0] && x < hi[0] && y > lo[1] && y < hi[1];
      const bool near = x > lo[0] - 1 && x < hi[0] + 1 && y > lo[1] - 1 && y < hi[1] + 1;
      if (in) {
        CHECK(mask.at(x, y) == 1);
        ++inside;
      } else if (!near) {
        CHECK(mask.at(x, y) == 0);
      } else {
        ++border;
      }
    }
  }
  const double area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
  CHECK(std::abs(count(mask) - area) <= border);
  CHECK(inside > 0);
}

TEST_CASE("shared edges are filled exactly once") {
  const auto cam = canonical(40, 40, 40.0);
  const Points quad{Vec3(-0.5, -0.5, 2), Vec3(0.5, -0.5, 2), Vec3(0.5, 0.5, 2), Vec3(-0.5, 0.5, 2)};
  const auto one = rasterize(cam, quad, {{0, 1, 2}});
  const auto two = rasterize(cam, quad, {{0, 2, 3}});
  const auto both = rasterizeMask(cam, quad, {{0, 1, 2}, {0, 2, 3}});
  CHECK(count(one.mask) + count(two.mask) == count(both));
}

TEST_CASE("z-buffer keeps the nearest surface and rendering is deterministic") {
  const auto cam = canonical();
  const auto near = sphereMesh(0.5, 10, 16, Vec3(0, 0, 3));
  auto far = sphereMesh(1.0, 10, 16, Vec3(0, 0, 6));
  Points v = near.vertices;
  auto f = near.faces;
  const int base = static_cast<int>(v.size());
  v.insert(v.end(), far.vertices.begin(), far.vertices.end());
  for (const auto& t : far.faces) {
    f.emplace_back(t[0] + base, t[1] + base, t[2] + base);
  }
  const auto r = rasterize(cam, v, f);
  const int cx = static_cast<int>(cam.cx), cy = static_cast<int>(cam.cy);
  CHECK(r.depth.at(cx, cy) == doctest::Approx(2.5).epsilon(0.01));
  CHECK(std::isinf(r.depth.at(0, 0)));
  CHECK(rasterize(cam, v, f).mask == r.mask);
}

TEST_CASE("distance transform of a background border ring grows by one per ring") {
  const int w = 11, h = 9;
  Mask m(w, h, 1);
  for (int x = 0; x < w; ++x) {
    m.at(x, 0) = m.at(x, h - 1) = 0;
  }
  for (int y = 0; y < h; ++y) {
    m.at(0, y) = m.at(w - 1, y) = 0;
  }
  const auto s = distanceTransform(m);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      CHECK(s.dt.at(x, y) == std::min({x - 1, y - 1, w - 2 - x, h - 2 - y}));
    }
  }
}

TEST_CASE("single foreground pixel") {
  Mask m(5, 5, 0);
  m.at(2, 2) = 1;
  CHECK(distanceTransform(m).dt.at(0, 0) == std::sqrt(8.0));
}

TEST_CASE("distance transform equals brute force on random masks") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = randomMask(rng, 32, 32, 0.2 + 0.6 * (trial % 5) / 4.0);
    CHECK(distanceTransform(m).dt == bruteForceDt(m));
  }
}

TEST_CASE("empty and full masks have no contour") {
  CHECK_THROWS_AS(distanceTransform(Mask(8, 8, 0)), DataError);
  CHECK_THROWS_AS(distanceTransform(Mask(8, 8, 1)), DataError);
}

TEST_CASE("bilinear samples next to the contour stay within sqrt 2") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto m = randomMask(rng, 24, 24, 0.5);
  const auto s = distanceTransform(m);
  const auto contour = contourPixels(m);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 24; ++x) {
      if (!contour.at(x, y)) {
        continue;
      }
      for (int k = 0; k < 4; ++k) {
        const Vec2 p(x + u(rng) * (k & 1 ? 1 : -1), y + u(rng) * (k & 2 ? 1 : -1));
        if (p[0] < 0 || p[1] < 0 || p[0] > 23 || p[1] > 23) {
          continue;
        }
        CHECK(sampleBilinear(s.dt, p) <= std::sqrt(2.0) + 1e-12);
      }
    }
  }
}

TEST_CASE("bilinear gradient matches central differences inside a cell") {
  std::mt19937_64 rng(5);
  const auto s = distanceTransform(randomMask(rng, 16, 16, 0.5));
  const Vec2 p(6.3, 9.7);
  const auto cell = bilinearCell(16, 16, p);
  Vec2 g;
  sampleBilinear(s.dt, cell, p, &g);
  const double h = 1e-6;
  CHECK(g[0] == doctest::Approx((sampleBilinear(s.dt, cell, p + Vec2(h, 0)) - sampleBilinear(s.dt, cell, p - Vec2(h, 0))) / (2 * h)));
  CHECK(g[1] == doctest::Approx((sampleBilinear(s.dt, cell, p + Vec2(0, h)) - sampleBilinear(s.dt, cell, p - Vec2(0, h))) / (2 * h)));
}

TEST_CASE("single triangle: every vertex is a boundary vertex") {
  // vertices land on pixel centers
  const auto cam = canonical(65, 65, 60.0);
  const Points tri{Vec3(-0.4, -0.3, 2), Vec3(0.5, -0.2, 2), Vec3(0.0, 0.5, 2)};
  const std::vector<Eigen::Vector3i> faces{{0, 1, 2}};
  const auto b = boundaryVertices(cam, tri, faces, computeVertexNormals(tri, faces));
  std::set<int> ids;
  for (const auto& v : b) {
    ids.insert(v.vertex);
    CHECK(v.normal.norm() == doctest::Approx(1.0));
  }
  CHECK(ids == std::set<int>{0, 1, 2});
}

TEST_CASE("sphere boundary is the visible rim") {
  const auto cam = canonical(160, 160, 300.0);
  const Vec3 center(0.05, -0.03, 5.0);
  const auto sphere = sphereMesh(1.0, 40, 64, center);
  const auto normals = computeVertexNormals(sphere.vertices, sphere.faces);
  const auto r = rasterize(cam, sphere.vertices, sphere.faces);
  const auto b = boundaryVertices(cam, sphere.vertices, sphere.faces, buildEdges(sphere.faces), normals, r.depth);
  REQUIRE(!b.empty());
  const auto contour = contourPixels(r.mask);
  auto nearContour = [&](const Vec2& p) {
    double best = 1e9;
    for (int y = 0; y < contour.height; ++y) {
      for (int x = 0; x < contour.width; ++x) {
        if (contour.at(x, y)) {
          best = std::min(best, (p - Vec2(x, y)).norm());
        }
      }
    }
    return best;
  };
  std::set<int> ids;
  const Vec2 c2 = project(cam, center);
  for (const auto& v : b) {
    ids.insert(v.vertex);
    const Vec2 p = project(cam, sphere.vertices[v.vertex]);
    CHECK(nearContour(p) <= kRimDistance);
    CHECK(v.normal.dot((p - c2).normalized()) > 0.8);
  }
  // interior front-facing vertices never qualify
  for (int i = 0; i < static_cast<int>(sphere.vertices.size()); ++i) {
    const Vec3 view = (sphere.vertices[i] - cam.origin).normalized();
    if (normals[i].dot(view) < -0.3) {
      CHECK(ids.count(i) == 0);
    }
  }
  // the rim is covered all the way round
  std::set<int> sectors;
  for (int i : ids) {
    const Vec2 d = project(cam, sphere.vertices[i]) - c2;
    sectors.insert(static_cast<int>(std::floor((std::atan2(d[1], d[0]) + M_PI) / (2 * M_PI) * 16)) % 16);
  }
  CHECK(sectors.size() == 16);
}

TEST_CASE("mask and distance image files round trip") {
  TempDir dir("camproj");
  std::mt19937_64 rng(6);
  const auto m = randomMask(rng, 17, 13, 0.5);
  writePgm(dir.path() / "m.pgm", m);
  CHECK(readPgm(dir.path() / "m.pgm") == m);
  const auto s = distanceTransform(m);
  writeDistanceImage(dir.path() / "d.bin", s.dt);
  const auto back = readDistanceImage(dir.path() / "d.bin");
  REQUIRE(back.width == 17);
  for (size_t i = 0; i < back.data.size(); ++i) {
    CHECK(back.data[i] == static_cast<double>(static_cast<float>(s.dt.data[i])));
  }
  {
    std::ofstream(dir.path() / "bad.pgm") << "P2\n3 3\n1\n";
  }
  CHECK_THROWS_AS(readPgm(dir.path() / "bad.pgm"), DataError);
  CHECK_THROWS_AS(readDistanceImage(dir.path() / "missing.bin"), DataError);
}

TEST_CASE("camera files round trip") {
  TempDir dir("cams");
  const std::vector<Camera> cams{canonical(), Camera::lookAt(Vec3(3, 1, 2), Vec3::Zero(), Vec3::UnitY(), 400, 320, 240)};
  writeCameras(dir.path() / "c.json", cams);
  const auto back = readCameras(dir.path() / "c.json");
  REQUIRE(back.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(back[i].E == cams[i].E);
    CHECK(back[i].R == cams[i].R);
    CHECK(back[i].origin == cams[i].origin);
    CHECK(back[i].width == cams[i].width);
  }
}

}
