#include "dp/scene.hpp"

#include <algorithm>
#include <limits>

namespace dp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Primitive {
  enum class Kind { Box, Cylinder } kind;
  Vec3 center;
  Vec3 extents;     // box: full extents; cylinder: {radius, width, unused}
  double area = 0;
};

double box_area(const Vec3& e) {
  return 2.0 * (e.x * e.y + e.y * e.z + e.x * e.z);
}

double cylinder_area(double r, double w) {
  return kTwoPi * r * w + 2.0 * (kTwoPi / 2.0) * r * r;  // lateral + two caps
}

Vec3 sample_box_surface(const Vec3& center, const Vec3& e, Rng& rng) {
  // Face picked by area; +-x, +-y, +-z pairs.
  const double ax = e.y * e.z, ay = e.x * e.z, az = e.x * e.y;
  const double total = 2.0 * (ax + ay + az);
  double u = rng.uniform() * total;
  const double hx = 0.5 * e.x, hy = 0.5 * e.y, hz = 0.5 * e.z;
  Vec3 p;
  if (u < 2.0 * ax) {
    p.x = u < ax ? hx : -hx;
    p.y = rng.uniform(-hy, hy);
    p.z = rng.uniform(-hz, hz);
  } else if ((u -= 2.0 * ax) < 2.0 * ay) {
    p.y = u < ay ? hy : -hy;
    p.x = rng.uniform(-hx, hx);
    p.z = rng.uniform(-hz, hz);
  } else {
    u -= 2.0 * ay;
    p.z = u < az ? hz : -hz;
    p.x = rng.uniform(-hx, hx);
    p.y = rng.uniform(-hy, hy);
  }
  return center + p;
}

Vec3 sample_cylinder_surface(const Vec3& center, double r, double w, Rng& rng) {
  const double lateral = kTwoPi * r * w;
  const double cap = (kTwoPi / 2.0) * r * r;
  const double u = rng.uniform() * (lateral + 2.0 * cap);
  Vec3 p;
  if (u < lateral) {
    const double theta = rng.uniform(0.0, kTwoPi);
    p = {r * std::cos(theta), rng.uniform(-0.5 * w, 0.5 * w), r * std::sin(theta)};
  } else {
    const double theta = rng.uniform(0.0, kTwoPi);
    const double rr = r * std::sqrt(rng.uniform());
    const double side = u < lateral + cap ? 0.5 * w : -0.5 * w;
    p = {rr * std::cos(theta), side, rr * std::sin(theta)};
  }
  return center + p;
}

std::vector<Primitive> primitives_of(const SceneSpec& s) {
  std::vector<Primitive> prims;
  prims.push_back({Primitive::Kind::Box, Vec3{}, s.body_extents, box_area(s.body_extents)});
  if (s.cabin_extents.x > 0 && s.cabin_extents.y > 0 && s.cabin_extents.z > 0)
    prims.push_back(
        {Primitive::Kind::Box, s.cabin_offset, s.cabin_extents, box_area(s.cabin_extents)});
  if (s.wheel_radius > 0 && s.wheel_width > 0) {
    const double wx = 0.33 * s.body_extents.x;
    const double wy = 0.5 * s.body_extents.y - 0.5 * s.wheel_width;
    const double wz = -0.5 * s.body_extents.z;  // axles at the body bottom plane
    for (const double sx : {-1.0, 1.0})
      for (const double sy : {-1.0, 1.0})
        prims.push_back({Primitive::Kind::Cylinder, Vec3{sx * wx, sy * wy, wz},
                         Vec3{s.wheel_radius, s.wheel_width, 0.0},
                         cylinder_area(s.wheel_radius, s.wheel_width)});
  }
  return prims;
}

}  // namespace

void SceneSpec::validate() const {
  if (!(body_extents.x > 0 && body_extents.y > 0 && body_extents.z > 0))
    throw InvalidInput("SceneSpec: body extents must be positive");
  if (wheel_radius < 0 || wheel_width < 0)
    throw InvalidInput("SceneSpec: negative wheel dimensions");
}

Vec3 SceneSpec::full_extent() const {
  double zmin = -0.5 * body_extents.z;
  double zmax = 0.5 * body_extents.z;
  double xmax = 0.5 * body_extents.x;
  double ymax = 0.5 * body_extents.y;
  if (cabin_extents.x > 0 && cabin_extents.y > 0 && cabin_extents.z > 0) {
    zmax = std::max(zmax, cabin_offset.z + 0.5 * cabin_extents.z);
    xmax = std::max(xmax, std::abs(cabin_offset.x) + 0.5 * cabin_extents.x);
    ymax = std::max(ymax, std::abs(cabin_offset.y) + 0.5 * cabin_extents.y);
  }
  if (wheel_radius > 0 && wheel_width > 0)
    zmin = std::min(zmin, -0.5 * body_extents.z - wheel_radius);
  return {2.0 * xmax, 2.0 * ymax, zmax - zmin};
}

SceneSpec make_scene(int family, const Rng& rng) {
  if (family < 0 || family >= kNumShapeFamilies)
    throw InvalidInput("make_scene: family must be in 0.." +
                       std::to_string(kNumShapeFamilies - 1));
  // Child stream keyed by the family, so a fixed seed still yields eight
  // distinct cars and the result does not depend on the parent counter.
  Rng r = rng.child(0x5CE0E000u + static_cast<std::uint64_t>(family));

  // Full extents: +-20% jitter around the shared nominal.
  const Vec3 ext{kNominalCarExtent.x * r.uniform(0.8, 1.2),
                 kNominalCarExtent.y * r.uniform(0.8, 1.2),
                 kNominalCarExtent.z * r.uniform(0.8, 1.2)};

  // Proportions vary per family around family-specific anchors.
  const double t = static_cast<double>(family) / (kNumShapeFamilies - 1);
  const double cabin_h_frac = 0.24 + 0.10 * t + r.uniform(-0.02, 0.02);
  const double wheel_frac = 0.13 + 0.06 * (1.0 - t) + r.uniform(-0.01, 0.01);
  const double cabin_len_frac = 0.35 + 0.20 * t + r.uniform(-0.03, 0.03);
  const double cabin_off_frac = -0.12 + 0.20 * t + r.uniform(-0.02, 0.02);

  SceneSpec s;
  s.family = family;
  s.wheel_radius = wheel_frac * ext.z;
  const double cabin_h = cabin_h_frac * ext.z;
  const double body_h = ext.z - cabin_h - s.wheel_radius;

  s.body_extents = {ext.x, ext.y, body_h};
  s.cabin_extents = {cabin_len_frac * ext.x, 0.88 * ext.y, cabin_h};
  s.cabin_offset = {cabin_off_frac * ext.x, 0.0, 0.5 * body_h + 0.5 * cabin_h};
  s.wheel_width = 0.09 * ext.y;
  s.yaw = r.uniform(0.0, kTwoPi);
  s.translation = {r.uniform(-30.0, 30.0), r.uniform(-30.0, 30.0), r.uniform(-10.0, 10.0)};
  s.validate();
  return s;
}

namespace {

double box_surface_distance(const Vec3& p, const Vec3& center, const Vec3& e) {
  const Vec3 d = p - center;
  const Vec3 q{std::abs(d.x) - 0.5 * e.x, std::abs(d.y) - 0.5 * e.y,
               std::abs(d.z) - 0.5 * e.z};
  const Vec3 outside{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
  const double sd = outside.norm() + std::min(std::max({q.x, q.y, q.z}), 0.0);
  return std::abs(sd);
}

double cylinder_surface_distance(const Vec3& p, const Vec3& center, double r, double w) {
  const Vec3 d = p - center;
  const double radial = std::sqrt(d.x * d.x + d.z * d.z) - r;
  const double axial = std::abs(d.y) - 0.5 * w;
  const double ox = std::max(radial, 0.0), oy = std::max(axial, 0.0);
  const double sd = std::sqrt(ox * ox + oy * oy) + std::min(std::max(radial, axial), 0.0);
  return std::abs(sd);
}

}  // namespace

double surface_distance(const SceneSpec& scene, const Vec3& local_point) {
  double best = std::numeric_limits<double>::infinity();
  for (const Primitive& prim : primitives_of(scene)) {
    const double d = prim.kind == Primitive::Kind::Box
                         ? box_surface_distance(local_point, prim.center, prim.extents)
                         : cylinder_surface_distance(local_point, prim.center,
                                                     prim.extents.x, prim.extents.y);
    best = std::min(best, d);
  }
  return best;
}

PointCloud sample_surface(const SceneSpec& scene, std::size_t n, Rng& rng) {
  scene.validate();
  if (n < 1) throw InvalidInput("sample_surface: need n >= 1");
  const std::vector<Primitive> prims = primitives_of(scene);

  std::vector<double> cumulative(prims.size());
  double total = 0.0;
  for (std::size_t i = 0; i < prims.size(); ++i) {
    total += prims[i].area;
    cumulative[i] = total;
  }

  const Mat3 rot = Mat3::rotation_z(scene.yaw);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform() * total;
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    const Primitive& prim = prims[std::min(idx, prims.size() - 1)];
    const Vec3 local = prim.kind == Primitive::Kind::Box
                           ? sample_box_surface(prim.center, prim.extents, rng)
                           : sample_cylinder_surface(prim.center, prim.extents.x,
                                                     prim.extents.y, rng);
    cloud.points.push_back(rot.apply(local) + scene.translation);
  }
  return cloud;
}

}  // namespace dp
