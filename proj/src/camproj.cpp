#include "hcap/camproj.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hcap {

using json = nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::Matrix4d composeProjection(const Mat3& R, const Vec3& origin, double fx, double fy, double cx, double cy) {
  Eigen::Matrix4d intrinsics = Eigen::Matrix4d::Identity();
  intrinsics(0, 0) = fx;
  intrinsics(1, 1) = fy;
  intrinsics(0, 2) = cx;
  intrinsics(1, 2) = cy;
  Eigen::Matrix4d extrinsics = Eigen::Matrix4d::Identity();
  extrinsics.topLeftCorner<3, 3>() = R;
  extrinsics.topRightCorner<3, 1>() = -R * origin;
  return intrinsics * extrinsics;
}

} // namespace

Camera Camera::fromParameters(const Mat3& R, const Vec3& origin, double fx, double fy, double cx, double cy, int width, int height) {
  Camera c;
  c.R = R;
  c.origin = origin;
  c.fx = fx;
  c.fy = fy;
  c.cx = cx;
  c.cy = cy;
  c.width = width;
  c.height = height;
  c.E = composeProjection(R, origin, fx, fy, cx, cy);
  return c;
}

Camera Camera::lookAt(const Vec3& origin, const Vec3& target, const Vec3& up, double focal, int width, int height) {
  const Vec3 z = (target - origin).normalized();
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  Mat3 R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  return fromParameters(R, origin, focal, focal, 0.5 * (width - 1), 0.5 * (height - 1), width, height);
}

Vec2 project(const Camera& camera, const Vec3& world) {
  const Vec3 c = camera.toCamera(world);
  if (!(c[2] > kNearDepth)) {
    throw BehindCameraError("point behind camera (depth " + std::to_string(c[2]) + ")");
  }
  return {camera.fx * c[0] / c[2] + camera.cx, camera.fy * c[1] / c[2] + camera.cy};
}

Eigen::Matrix<double, 2, 3> projectJacobian(const Camera& camera, const Vec3& world) {
  const Vec3 c = camera.toCamera(world);
  const double iz = 1.0 / c[2];
  Eigen::Matrix<double, 2, 3> jc;
  jc << camera.fx * iz, 0.0, -camera.fx * c[0] * iz * iz, //
      0.0, camera.fy * iz, -camera.fy * c[1] * iz * iz;
  return jc * camera.R;
}

void validateCamera(const Camera& camera) {
  if (!(camera.fx > 0.0) || !(camera.fy > 0.0)) {
    throw DataError("camera focal lengths must be positive");
  }
  if (camera.width <= 1 || camera.height <= 1) {
    throw DataError("camera resolution must be at least 2x2");
  }
  if (!(camera.R * camera.R.transpose()).isApprox(Mat3::Identity(), 1e-9) || camera.R.determinant() < 0.0) {
    throw DataError("camera rotation is not a proper rotation");
  }
  const auto expected = composeProjection(camera.R, camera.origin, camera.fx, camera.fy, camera.cx, camera.cy);
  if ((expected - camera.E).norm() > 1e-9 * std::max(1.0, expected.norm())) {
    throw DataError("camera projection matrix inconsistent with R, origin and intrinsics");
  }
}

// --- rasterization ---------------------------------------------------------

RasterResult rasterize(const Camera& camera, const Points& vertices, const std::vector<Eigen::Vector3i>& faces) {
  RasterResult out{Mask(camera.width, camera.height, 0), Image<double>(camera.width, camera.height, kInf)};
  std::vector<Vec3> screen(vertices.size());
  std::vector<char> valid(vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) {
    const Vec3 c = camera.toCamera(vertices[i]);
    valid[i] = c[2] > kNearDepth;
    if (valid[i]) {
      screen[i] = {camera.fx * c[0] / c[2] + camera.cx, camera.fy * c[1] / c[2] + camera.cy, c[2]};
    }
  }
  auto edge = [](const Vec3& p0, const Vec3& p1, double x, double y) {
    return (p1[0] - p0[0]) * (y - p0[1]) - (p1[1] - p0[1]) * (x - p0[0]);
  };
  // Top-left rule for positively oriented triangles in y-down image space.
  auto owns = [](const Vec3& p0, const Vec3& p1) {
    const double dy = p1[1] - p0[1];
    return dy < 0.0 || (dy == 0.0 && p1[0] - p0[0] > 0.0);
  };
  for (const auto& f : faces) {
    if (!valid[f[0]] || !valid[f[1]] || !valid[f[2]]) {
      continue;
    }
    Vec3 a = screen[f[0]];
    Vec3 b = screen[f[1]];
    Vec3 c = screen[f[2]];
    double area = edge(a, b, c[0], c[1]);
    if (area == 0.0) {
      continue;
    }
    if (area < 0.0) {
      std::swap(b, c);
      area = -area;
    }
    const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({a[0], b[0], c[0]}))));
    const int x1 = std::min(camera.width - 1, static_cast<int>(std::floor(std::max({a[0], b[0], c[0]}))));
    const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({a[1], b[1], c[1]}))));
    const int y1 = std::min(camera.height - 1, static_cast<int>(std::floor(std::max({a[1], b[1], c[1]}))));
    const bool ownAB = owns(a, b);
    const bool ownBC = owns(b, c);
    const bool ownCA = owns(c, a);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double wa = edge(b, c, x, y);
        const double wb = edge(c, a, x, y);
        const double wc = edge(a, b, x, y);
        if (wa < 0.0 || wb < 0.0 || wc < 0.0) {
          continue;
        }
        if ((wa == 0.0 && !ownBC) || (wb == 0.0 && !ownCA) || (wc == 0.0 && !ownAB)) {
          continue;
        }
        const double invDepth = (wa / a[2] + wb / b[2] + wc / c[2]) / area;
        const double z = 1.0 / invDepth;
        out.mask.at(x, y) = 1;
        if (z < out.depth.at(x, y)) {
          out.depth.at(x, y) = z;
        }
      }
    }
  }
  return out;
}

Mask rasterizeMask(const Camera& camera, const Points& vertices, const std::vector<Eigen::Vector3i>& faces) {
  return rasterize(camera, vertices, faces).mask;
}

// --- distance transform ----------------------------------------------------

Mask contourPixels(const Mask& mask) {
  Mask contour(mask.width, mask.height, 0);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) {
        continue;
      }
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (mask.contains(nx[k], ny[k]) && !mask.at(nx[k], ny[k])) {
          contour.at(x, y) = 1;
          break;
        }
      }
    }
  }
  return contour;
}

namespace {

// Lower envelope of parabolas (q - v)^2 + f(v) over the finite entries of f.
void squaredDistance1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) {
      continue;
    }
    const double fq = f[q] + static_cast<double>(q) * q;
    double s = -kInf;
    while (k >= 0) {
      const int p = v[k];
      s = (fq - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) {
        break;
      }
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = k == 0 ? -kInf : s;
  }
  if (k < 0) {
    std::fill(d.begin(), d.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (j < k && z[j + 1] < q) {
      ++j;
    }
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

} // namespace

SilhouetteObservation makeSilhouette(Mask mask, Image<double> dt) {
  SilhouetteObservation out;
  const int w = dt.width;
  const int h = dt.height;
  out.gradX = Image<double>(w, h, 0.0);
  out.gradY = Image<double>(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      out.gradX.at(x, y) = xr > xl ? (dt.at(xr, y) - dt.at(xl, y)) / (xr - xl) : 0.0;
      out.gradY.at(x, y) = yd > yu ? (dt.at(x, yd) - dt.at(x, yu)) / (yd - yu) : 0.0;
    }
  }
  out.mask = std::move(mask);
  out.dt = std::move(dt);
  return out;
}

SilhouetteObservation distanceTransform(const Mask& mask) {
  const Mask contour = contourPixels(mask);
  const int w = mask.width;
  const int h = mask.height;
  if (std::none_of(contour.data.begin(), contour.data.end(), [](auto c) { return c != 0; })) {
    throw DataError("silhouette has no contour (mask empty or full frame)");
  }
  Image<double> sq(w, h, kInf);
  const int n = std::max(w, h);
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  std::vector<double> f(h), d(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) {
      f[y] = contour.at(x, y) ? 0.0 : kInf;
    }
    squaredDistance1d(f, d, v, z);
    for (int y = 0; y < h; ++y) {
      sq.at(x, y) = d[y];
    }
  }
  f.resize(w);
  d.resize(w);
  Image<double> dt(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      f[x] = sq.at(x, y);
    }
    squaredDistance1d(f, d, v, z);
    for (int x = 0; x < w; ++x) {
      dt.at(x, y) = std::sqrt(d[x]);
    }
  }
  return makeSilhouette(mask, std::move(dt));
}

BilinearCell bilinearCell(int width, int height, const Vec2& p) {
  const double u = std::clamp(p[0], 0.0, static_cast<double>(width - 1));
  const double v = std::clamp(p[1], 0.0, static_cast<double>(height - 1));
  return {std::min(static_cast<int>(std::floor(u)), width - 2), std::min(static_cast<int>(std::floor(v)), height - 2)};
}

double sampleBilinear(const Image<double>& image, const BilinearCell& cell, const Vec2& p, Vec2* gradient) {
  const double fx = p[0] - cell.x0;
  const double fy = p[1] - cell.y0;
  const double d00 = image.at(cell.x0, cell.y0);
  const double d10 = image.at(cell.x0 + 1, cell.y0);
  const double d01 = image.at(cell.x0, cell.y0 + 1);
  const double d11 = image.at(cell.x0 + 1, cell.y0 + 1);
  if (gradient) {
    (*gradient)[0] = (1.0 - fy) * (d10 - d00) + fy * (d11 - d01);
    (*gradient)[1] = (1.0 - fx) * (d01 - d00) + fx * (d11 - d10);
  }
  return (1.0 - fy) * ((1.0 - fx) * d00 + fx * d10) + fy * ((1.0 - fx) * d01 + fx * d11);
}

// --- boundary vertices -----------------------------------------------------

std::vector<BoundaryVertex> boundaryVertices(
    const Camera& camera,
    const Points& vertices,
    const std::vector<Eigen::Vector3i>& faces,
    const std::vector<MeshEdge>& edges,
    const Points& normals,
    const Image<double>& depth) {
  std::vector<signed char> facing(faces.size(), 0); // +1 front, -1 back, 0 unusable
  for (size_t f = 0; f < faces.size(); ++f) {
    const Vec3& a = vertices[faces[f][0]];
    const Vec3& b = vertices[faces[f][1]];
    const Vec3& c = vertices[faces[f][2]];
    bool inFront = true;
    for (const Vec3* p : {&a, &b, &c}) {
      inFront = inFront && camera.toCamera(*p)[2] > kNearDepth;
    }
    if (!inFront) {
      continue;
    }
    const Vec3 n = (b - a).cross(c - a);
    const double s = n.dot(camera.origin - (a + b + c) / 3.0);
    facing[f] = s > 0.0 ? 1 : -1;
  }
  std::vector<char> candidate(vertices.size(), 0);
  for (const auto& e : edges) {
    bool contour = false;
    if (e.faces.size() == 1) {
      contour = facing[e.faces[0]] != 0;
    } else if (e.faces.size() == 2) {
      const int f0 = facing[e.faces[0]];
      const int f1 = facing[e.faces[1]];
      contour = f0 != 0 && f1 != 0 && f0 != f1;
    }
    if (contour) {
      candidate[e.a] = 1;
      candidate[e.b] = 1;
    }
  }
  Mask rendered(depth.width, depth.height, 0);
  for (size_t k = 0; k < depth.data.size(); ++k) {
    rendered.data[k] = std::isfinite(depth.data[k]) ? 1 : 0;
  }
  const Mask rim = contourPixels(rendered);
  auto nearRim = [&](const Vec2& p) {
    const int r = static_cast<int>(std::ceil(kRimDistance));
    const int x0 = static_cast<int>(std::lround(p[0]));
    const int y0 = static_cast<int>(std::lround(p[1]));
    for (int y = y0 - r; y <= y0 + r; ++y) {
      for (int x = x0 - r; x <= x0 + r; ++x) {
        if (rim.contains(x, y) && rim.at(x, y) && (Vec2(x, y) - p).squaredNorm() <= kRimDistance * kRimDistance) {
          return true;
        }
      }
    }
    return false;
  };
  std::vector<BoundaryVertex> out;
  for (size_t i = 0; i < vertices.size(); ++i) {
    if (!candidate[i]) {
      continue;
    }
    const Vec3 c = camera.toCamera(vertices[i]);
    if (!(c[2] > kNearDepth)) {
      continue;
    }
    const Vec2 p(camera.fx * c[0] / c[2] + camera.cx, camera.fy * c[1] / c[2] + camera.cy);
    const int px = static_cast<int>(std::lround(p[0]));
    const int py = static_cast<int>(std::lround(p[1]));
    if (!depth.contains(px, py)) {
      continue;
    }
    const double zbuf = depth.at(px, py);
    if (std::isfinite(zbuf) && c[2] > zbuf * 1.01) {
      continue;
    }
    if (!nearRim(p)) {
      continue;
    }
    const Vec2 n2 = projectJacobian(camera, vertices[i]) * normals[i];
    const double len = n2.norm();
    out.push_back({static_cast<int>(i), len > 1e-12 ? Vec2(n2 / len) : Vec2::Zero()});
  }
  return out;
}

std::vector<BoundaryVertex> boundaryVertices(
    const Camera& camera,
    const Points& vertices,
    const std::vector<Eigen::Vector3i>& faces,
    const Points& normals) {
  const auto raster = rasterize(camera, vertices, faces);
  return boundaryVertices(camera, vertices, faces, buildEdges(faces), normals, raster.depth);
}

// --- file formats ----------------------------------------------------------

void writePgm(const std::filesystem::path& path, const Mask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  for (auto v : mask.data) {
    out.put(static_cast<char>(v ? 255 : 0));
  }
}

Mask readPgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  auto token = [&]() {
    std::string t;
    while (t.empty()) {
      int c = in.get();
      if (c == EOF) {
        throw DataError("truncated PGM header in " + path.string());
      }
      if (c == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (std::isspace(c)) {
        continue;
      }
      t.push_back(static_cast<char>(c));
      while ((c = in.peek()) != EOF && !std::isspace(c)) {
        t.push_back(static_cast<char>(in.get()));
      }
    }
    return t;
  };
  if (token() != "P5") {
    throw DataError("not a binary PGM: " + path.string());
  }
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(token());
    h = std::stoi(token());
    maxval = std::stoi(token());
  } catch (const std::exception&) {
    throw DataError("malformed PGM header in " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw DataError("unsupported PGM in " + path.string());
  }
  in.get();
  Mask mask(w, h, 0);
  std::vector<char> buf(mask.data.size());
  if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size()))) {
    throw DataError("truncated PGM data in " + path.string());
  }
  for (size_t i = 0; i < buf.size(); ++i) {
    mask.data[i] = static_cast<unsigned char>(buf[i]) * 2 > maxval ? 1 : 0;
  }
  return mask;
}

namespace {

void putU32(std::ostream& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) {
    out.put(static_cast<char>((v >> (8 * b)) & 0xffu));
  }
}

std::uint32_t getU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
      (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

constexpr char kDtMagic[4] = {'H', 'D', 'T', '1'};

} // namespace

void writeDistanceImage(const std::filesystem::path& path, const Image<double>& dt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out.write(kDtMagic, 4);
  putU32(out, static_cast<std::uint32_t>(dt.width));
  putU32(out, static_cast<std::uint32_t>(dt.height));
  putU32(out, 0);
  for (double v : dt.data) {
    putU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
}

Image<double> readDistanceImage(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kDtMagic, 4) != 0) {
    throw DataError("bad distance image header in " + path.string());
  }
  const auto w = static_cast<int>(getU32(bytes.data() + 4));
  const auto h = static_cast<int>(getU32(bytes.data() + 8));
  if (w <= 0 || h <= 0 || bytes.size() != 16 + 4 * static_cast<size_t>(w) * h) {
    throw DataError("distance image size mismatch in " + path.string());
  }
  Image<double> dt(w, h, 0.0);
  for (size_t i = 0; i < dt.data.size(); ++i) {
    dt.data[i] = std::bit_cast<float>(getU32(bytes.data() + 16 + 4 * i));
  }
  return dt;
}

void writeCameras(const std::filesystem::path& path, const std::vector<Camera>& cameras) {
  json j;
  j["cameras"] = json::array();
  for (const auto& c : cameras) {
    json e = json::array();
    for (int r = 0; r < 4; ++r) {
      for (int k = 0; k < 4; ++k) {
        e.push_back(c.E(r, k));
      }
    }
    json rot = json::array();
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) {
        rot.push_back(c.R(r, k));
      }
    }
    j["cameras"].push_back(
        {{"E", e},
         {"R", rot},
         {"origin", {c.origin[0], c.origin[1], c.origin[2]}},
         {"fx", c.fx},
         {"fy", c.fy},
         {"cx", c.cx},
         {"cy", c.cy},
         {"width", c.width},
         {"height", c.height}});
  }
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << j.dump(1) << '\n';
}

std::vector<Camera> readCameras(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::vector<Camera> cameras;
  try {
    const json j = json::parse(in);
    for (const auto& jc : j.at("cameras")) {
      Camera c;
      const auto& e = jc.at("E");
      const auto& r = jc.at("R");
      if (e.size() != 16 || r.size() != 9) {
        throw DataError("camera matrices have wrong size");
      }
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
          c.E(a, b) = e[4 * a + b].get<double>();
        }
      }
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          c.R(a, b) = r[3 * a + b].get<double>();
        }
      }
      const auto& o = jc.at("origin");
      c.origin = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
      c.fx = jc.at("fx").get<double>();
      c.fy = jc.at("fy").get<double>();
      c.cx = jc.at("cx").get<double>();
      c.cy = jc.at("cy").get<double>();
      c.width = jc.at("width").get<int>();
      c.height = jc.at("height").get<int>();
      validateCamera(c);
      cameras.push_back(c);
    }
  } catch (const json::exception& e) {
    throw DataError("malformed camera file " + path.string() + ": " + e.what());
  }
  return cameras;
}

} // namespace hcap
