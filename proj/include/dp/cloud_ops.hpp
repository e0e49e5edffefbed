#pragma once

#include "dp/rng.hpp"
#include "dp/types.hpp"

namespace dp {

/// How farthest-point sampling picks its first point.
enum class FpsStart {
  Seeded,               ///< index drawn from the rng (default)
  FarthestFromCentroid  ///< order-invariant choice used by view fusion
};

Aabb bounding_box(const PointCloud& cloud);

/// Cloud re-expressed in a unit frame: (points - center) / scale.
struct NormalizedCloud {
  PointCloud cloud;  // bounding box inside [-1, 1]^3
  Vec3 center;       // cm
  double scale = 1;  // cm, half the bounding-box diagonal
};

/// Center on the bounding-box midpoint and divide by half the box diagonal.
/// Throws DegenerateCloud when all points coincide (zero diagonal).
NormalizedCloud normalize(const PointCloud& cloud);

PointCloud denormalize(const PointCloud& cloud, const Vec3& center, double scale);

/// Force a cloud to exactly m points. m <= n keeps a farthest-point-sampling
/// subset; m > n keeps everything and fills the deficit with copies of random
/// points jittered by isotropic Gaussian noise (sigma = 0.5 cm).
PointCloud resample(const PointCloud& cloud, std::size_t m, Rng& rng,
                    FpsStart start = FpsStart::Seeded);

/// Jitter bound used when reasoning about resample output extents (3 sigma).
inline constexpr double kResampleJitterSigmaCm = 0.5;

}  // namespace dp
