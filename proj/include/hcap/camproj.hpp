#pragma once

#include "hcap/assets.hpp"
#include "hcap/common.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

namespace hcap {

/// Pinhole camera. Camera coordinates: x right, y down, z forward.
/// Pixel (col, row) has its center at continuous image coordinate (col, row).
struct Camera {
  Eigen::Matrix4d E = Eigen::Matrix4d::Identity(); // world -> (u z, v z, z, 1)
  Mat3 R = Mat3::Identity(); // world -> camera rotation
  Vec3 origin = Vec3::Zero(); // camera center in world
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  static Camera fromParameters(const Mat3& R, const Vec3& origin, double fx, double fy, double cx, double cy, int width, int height);
  /// Camera at `origin` looking at `target` with image-up along `up`.
  static Camera lookAt(const Vec3& origin, const Vec3& target, const Vec3& up, double focal, int width, int height);

  Vec3 toCamera(const Vec3& world) const {
    return R * (world - origin);
  }
};

constexpr double kNearDepth = 1e-6;

/// Perspective projection to pixel coordinates; throws BehindCameraError.
Vec2 project(const Camera& camera, const Vec3& world);

/// d(pixel)/d(world) at `world`.
Eigen::Matrix<double, 2, 3> projectJacobian(const Camera& camera, const Vec3& world);

/// Checks E against (R, origin, intrinsics); throws DataError on mismatch.
void validateCamera(const Camera& camera);

template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T()) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  T& at(int x, int y) {
    return data[static_cast<size_t>(y) * width + x];
  }
  const T& at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x];
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  bool operator==(const Image& other) const = default;
};

using Mask = Image<std::uint8_t>; // 0 background, 1 foreground

struct RasterResult {
  Mask mask;
  Image<double> depth; // camera z of the nearest surface, +inf where empty
};

/// Scan-converts every triangle (no culling) with a z-buffer and a top-left
/// fill rule. Triangles with a vertex behind the near plane are skipped.
RasterResult rasterize(const Camera& camera, const Points& vertices, const std::vector<Eigen::Vector3i>& faces);

Mask rasterizeMask(const Camera& camera, const Points& vertices, const std::vector<Eigen::Vector3i>& faces);

struct SilhouetteObservation {
  Mask mask;
  Image<double> dt; // Euclidean distance (px) to the nearest contour pixel
  Image<double> gradX;
  Image<double> gradY;
};

/// Contour pixels: foreground with at least one in-image background 4-neighbor.
Mask contourPixels(const Mask& mask);

/// Exact Euclidean distance transform to the contour (separable squared-distance
/// lower envelopes) plus clamped central-difference gradients.
SilhouetteObservation distanceTransform(const Mask& mask);

/// Rebuilds the gradient images from mask + dt (used after reading dt from disk).
SilhouetteObservation makeSilhouette(Mask mask, Image<double> dt);

/// Bilinear cell used to sample an image; frozen across finite-difference probes.
struct BilinearCell {
  int x0 = 0;
  int y0 = 0;
};

BilinearCell bilinearCell(int width, int height, const Vec2& p);

/// Bilinear polynomial of `cell` evaluated at p (extrapolates outside the cell).
double sampleBilinear(const Image<double>& image, const BilinearCell& cell, const Vec2& p, Vec2* gradient = nullptr);

inline double sampleBilinear(const Image<double>& image, const Vec2& p, Vec2* gradient = nullptr) {
  return sampleBilinear(image, bilinearCell(image.width, image.height, p), p, gradient);
}

inline constexpr double kRimDistance = 1.5;

struct BoundaryVertex {
  int vertex = 0;
  Vec2 normal = Vec2::Zero(); // unit image-space outward normal
};

/// Vertices on contour edges (front/back-facing transitions and border edges)
/// that survive the 1% relative depth visibility test and project within
/// kRimDistance pixels of the rendered mask's contour.
std::vector<BoundaryVertex> boundaryVertices(
    const Camera& camera,
    const Points& vertices,
    const std::vector<Eigen::Vector3i>& faces,
    const std::vector<MeshEdge>& edges,
    const Points& normals,
    const Image<double>& depth);

std::vector<BoundaryVertex> boundaryVertices(
    const Camera& camera,
    const Points& vertices,
    const std::vector<Eigen::Vector3i>& faces,
    const Points& normals);

// --- file formats -----------------------------------------------------------

void writePgm(const std::filesystem::path& path, const Mask& mask);
Mask readPgm(const std::filesystem::path& path);
/// Little-endian float32 raster with a 16-byte header {"HDT1", W, H, 0}.
void writeDistanceImage(const std::filesystem::path& path, const Image<double>& dt);
Image<double> readDistanceImage(const std::filesystem::path& path);
void writeCameras(const std::filesystem::path& path, const std::vector<Camera>& cameras);
std::vector<Camera> readCameras(const std::filesystem::path& path);

} // namespace hcap
