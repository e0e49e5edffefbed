#include "dp/cloud_ops.hpp"

#include <algorithm>
#include <limits>

namespace dp {

Aabb bounding_box(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInput("bounding_box: empty cloud");
  Aabb box{cloud[0], cloud[0]};
  for (const Vec3& p : cloud.points) {
    box.min.x = std::min(box.min.x, p.x);
    box.min.y = std::min(box.min.y, p.y);
    box.min.z = std::min(box.min.z, p.z);
    box.max.x = std::max(box.max.x, p.x);
    box.max.y = std::max(box.max.y, p.y);
    box.max.z = std::max(box.max.z, p.z);
  }
  return box;
}

NormalizedCloud normalize(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidInput("normalize: empty cloud");
  const Aabb box = bounding_box(cloud);
  // Box center rather than the mean: keeps every output coordinate in
  // [-1, 1] even for lopsided clouds.
  const Vec3 center = box.center();
  const double scale = 0.5 * box.diagonal();
  if (scale == 0.0) throw DegenerateCloud("normalize: all points identical");
  NormalizedCloud out;
  out.center = center;
  out.scale = scale;
  out.cloud.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.cloud.points.push_back((p - center) / scale);
  return out;
}

PointCloud denormalize(const PointCloud& cloud, const Vec3& center, double scale) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(p * scale + center);
  return out;
}

namespace {

// Greedy max-min selection. Ties on the min-distance are broken by
// lexicographic point order so the selected set does not depend on the
// input permutation.
std::vector<std::size_t> farthest_point_indices(const PointCloud& cloud, std::size_t m,
                                                std::size_t start) {
  const std::size_t n = cloud.size();
  std::vector<std::size_t> picked;
  picked.reserve(m);
  picked.push_back(start);

  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t last = start;
  while (picked.size() < m) {
    std::size_t best = n;
    double best_d2 = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = squared_distance(cloud[last], cloud[j]);
      if (d2 < min_d2[j]) min_d2[j] = d2;
      if (min_d2[j] > best_d2 ||
          (min_d2[j] == best_d2 && best < n && lex_less(cloud[j], cloud[best]))) {
        best_d2 = min_d2[j];
        best = j;
      }
    }
    picked.push_back(best);
    last = best;
  }
  return picked;
}

std::size_t pick_start(const PointCloud& cloud, Rng& rng, FpsStart start) {
  if (start == FpsStart::Seeded) return rng.uniform_index(cloud.size());
  // Farthest from the centroid, ties broken lexicographically.
  Vec3 centroid{};
  for (const Vec3& p : cloud.points) centroid += p;
  centroid = centroid / static_cast<double>(cloud.size());
  std::size_t best = 0;
  double best_d2 = squared_distance(cloud[0], centroid);
  for (std::size_t j = 1; j < cloud.size(); ++j) {
    const double d2 = squared_distance(cloud[j], centroid);
    if (d2 > best_d2 || (d2 == best_d2 && lex_less(cloud[j], cloud[best]))) {
      best_d2 = d2;
      best = j;
    }
  }
  return best;
}

}  // namespace

PointCloud resample(const PointCloud& cloud, std::size_t m, Rng& rng, FpsStart start) {
  if (cloud.empty()) throw InvalidInput("resample: empty cloud");
  if (m < 1) throw InvalidInput("resample: target point count must be >= 1");
  const std::size_t n = cloud.size();

  PointCloud out;
  out.points.reserve(m);
  if (m <= n) {
    for (std::size_t idx : farthest_point_indices(cloud, m, pick_start(cloud, rng, start)))
      out.points.push_back(cloud[idx]);
    return out;
  }
  out.points = cloud.points;
  for (std::size_t i = n; i < m; ++i) {
    const Vec3 src = cloud[rng.uniform_index(n)];
    out.points.push_back(src + Vec3{rng.normal(kResampleJitterSigmaCm),
                                    rng.normal(kResampleJitterSigmaCm),
                                    rng.normal(kResampleJitterSigmaCm)});
  }
  return out;
}

}  // namespace dp
