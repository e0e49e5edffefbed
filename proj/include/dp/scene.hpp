#pragma once

#include "dp/cloud_ops.hpp"
#include "dp/rng.hpp"
#include "dp/types.hpp"

namespace dp {

/// Parametric car-like scene: a body box, a cabin box on top, and four wheel
/// cylinders (axis along y). Local frame: origin at the body-box center,
/// x along the length, z up. Zero cabin extents or wheel radius/width drop
/// that primitive (used by tests with single-box scenes).
struct SceneSpec {
  Vec3 body_extents;        // cm, full extents
  Vec3 cabin_extents;       // cm; any component 0 disables the cabin
  Vec3 cabin_offset;        // cabin center relative to body center
  double wheel_radius = 0;  // cm; 0 disables wheels
  double wheel_width = 0;
  double yaw = 0;           // pose: rotation about the vertical axis, radians
  Vec3 translation;         // pose: cm
  int family = 0;

  void validate() const;

  /// Overall unposed extent (length, width, height) including wheels/cabin.
  Vec3 full_extent() const;
};

inline constexpr int kNumShapeFamilies = 8;

/// Nominal overall car extent the families are built around (cm).
inline constexpr Vec3 kNominalCarExtent{445.0, 175.0, 158.0};

/// Deterministic car instance for (family, rng seed). Full extents jitter
/// within +-20% of the nominal; proportions (cabin, wheels) vary per family.
SceneSpec make_scene(int family, const Rng& rng);

/// n points drawn uniformly by surface area over the union of primitive
/// surfaces, then posed (yaw about z, then translation).
PointCloud sample_surface(const SceneSpec& scene, std::size_t n, Rng& rng);

/// Unsigned distance from a point in the unposed local frame to the nearest
/// primitive surface. Zero (to fp rounding) for freshly sampled points.
double surface_distance(const SceneSpec& scene, const Vec3& local_point);

}  // namespace dp
