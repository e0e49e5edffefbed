#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dp {

// ---------------------------------------------------------------------------
// Errors. Each maps to one failure class surfaced by the CLI exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error { public: using Error::Error; };
class DegenerateCloud : public Error { public: using Error::Error; };
class ShapeError : public Error { public: using Error::Error; };
class NumericalError : public Error { public: using Error::Error; };
class SizeMismatch : public Error { public: using Error::Error; };
class TooLarge : public Error { public: using Error::Error; };
class EmptyView : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class InvalidConfig : public Error { public: using Error::Error; };
class ConfigMismatch : public Error { public: using Error::Error; };
class ParseError : public Error { public: using Error::Error; };

// ---------------------------------------------------------------------------
// Small fixed-size linear algebra. All coordinates are centimeters, world
// frame, double precision.
// ---------------------------------------------------------------------------

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  constexpr double squared_norm() const { return x * x + y * y + z * z; }
  double norm() const { return std::sqrt(squared_norm()); }

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

  friend constexpr bool operator==(const Vec3& a, const Vec3& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
  }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Shared by brute-force and kd-tree nearest-neighbor paths so both produce
// bit-identical distances.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline double distance(const Vec3& a, const Vec3& b) {
  return std::sqrt(squared_distance(a, b));
}

// Used for deterministic tie-breaking that does not depend on point order.
inline constexpr bool lex_less(const Vec3& a, const Vec3& b) {
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  return a.z < b.z;
}

// Row-major 3x3 matrix.
struct Mat3 {
  double m[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};

  static constexpr Mat3 identity() { return {}; }

  static Mat3 rotation_z(double radians) {
    const double c = std::cos(radians), s = std::sin(radians);
    return Mat3{{c, -s, 0, s, c, 0, 0, 0, 1}};
  }

  constexpr double operator()(int r, int c) const { return m[r * 3 + c]; }
  double& operator()(int r, int c) { return m[r * 3 + c]; }

  Vec3 apply(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat3 transposed() const {
    return Mat3{{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  double determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  /// Nearest right-handed orthonormal frame via Gram-Schmidt on the columns.
  /// Used to repair rotations stored at float precision.
  Mat3 orthonormalized() const {
    Vec3 x{m[0], m[3], m[6]}, y{m[1], m[4], m[7]};
    x = x / x.norm();
    y = y - x * y.dot(x);
    y = y / y.norm();
    const Vec3 z = x.cross(y);
    Mat3 r{};
    for (int i = 0; i < 3; ++i) {
      r(i, 0) = x[i];
      r(i, 1) = y[i];
      r(i, 2) = z[i];
    }
    return r;
  }

  // Orthonormal with determinant +1, within tol.
  bool is_rotation(double tol = 1e-9) const {
    const Mat3 p = *this * this->transposed();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double want = i == j ? 1.0 : 0.0;
        if (std::abs(p(i, j) - want) > tol) return false;
      }
    return std::abs(determinant() - 1.0) <= tol;
  }
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Ordered list of 3D points in centimeters. Point order carries no meaning
/// for metrics but is preserved so runs are reproducible.
struct PointCloud {
  std::vector<Vec3> points;

  PointCloud() = default;
  explicit PointCloud(std::vector<Vec3> pts) : points(std::move(pts)) {}

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Vec3& operator[](std::size_t i) { return points[i]; }
  const Vec3& operator[](std::size_t i) const { return points[i]; }

  bool all_finite() const {
    for (const Vec3& p : points)
      if (!p.finite()) return false;
    return true;
  }
};

/// Axis-aligned bounding box, min <= max componentwise.
struct Aabb {
  Vec3 min, max;

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return (min + max) * 0.5; }
  double diagonal() const { return extent().norm(); }

  bool contains(const Vec3& p, double slack = 0.0) const {
    return p.x >= min.x - slack && p.x <= max.x + slack && p.y >= min.y - slack &&
           p.y <= max.y + slack && p.z >= min.z - slack && p.z <= max.z + slack;
  }

  bool contains(const Aabb& o, double slack = 0.0) const {
    return contains(o.min, slack) && contains(o.max, slack);
  }

  Aabb inflated(double r) const {
    return {min - Vec3{r, r, r}, max + Vec3{r, r, r}};
  }
};

/// Camera pose + pinhole intrinsics. `rotation` maps camera frame to world
/// frame; camera looks along +z, x right, y down. Focal length and principal
/// point are in pixels.
struct Viewpoint {
  Vec3 position;                 // cm, world frame
  Mat3 rotation;                 // camera-to-world
  double focal_px = 64.0;
  double cx = 32.0, cy = 32.0;   // principal point, px
  int height = 64, width = 64;

  void validate() const {
    if (!rotation.is_rotation(1e-9))
      throw InvalidInput("Viewpoint rotation is not orthonormal with det +1");
    if (height < 8 || width < 8)
      throw InvalidInput("Viewpoint image size must be at least 8x8");
    if (!(focal_px > 0.0))
      throw InvalidInput("Viewpoint focal length must be positive");
  }

  Vec3 world_to_camera(const Vec3& p) const {
    return rotation.transposed().apply(p - position);
  }
  Vec3 camera_to_world(const Vec3& p) const {
    return rotation.apply(p) + position;
  }

  /// Camera placed at `position` looking at `target`, with the world +z axis
  /// as up reference.
  static Viewpoint look_at(const Vec3& position, const Vec3& target, double focal_px,
                           int height, int width);
};

}  // namespace dp
