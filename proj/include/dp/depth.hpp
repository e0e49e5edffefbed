#pragma once

#include "dp/cloud_ops.hpp"
#include "dp/rng.hpp"
#include "dp/types.hpp"

#include <filesystem>
#include <vector>

namespace dp {

/// Sentinel value for pixels with no return.
inline constexpr double kNoReturn = -1.0;

/// H x W grid of ranges (cm, Euclidean distance from the camera center) with
/// the producing viewpoint attached. Non-sentinel values lie in
/// (0, max_range].
struct DepthImage {
  int height = 0, width = 0;
  std::vector<double> ranges;  // row-major, kNoReturn = no return
  Viewpoint view;
  double max_range = 2000.0;  // cm

  DepthImage() = default;
  DepthImage(const Viewpoint& v, double max_range_cm = 2000.0)
      : height(v.height),
        width(v.width),
        ranges(static_cast<std::size_t>(v.height) * v.width, kNoReturn),
        view(v),
        max_range(max_range_cm) {}

  double& at(int row, int col) { return ranges[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const {
    return ranges[static_cast<std::size_t>(row) * width + col];
  }
  bool valid(int row, int col) const { return at(row, col) != kNoReturn; }

  std::size_t valid_count() const;
};

/// Per-pixel corruption emulating an imperfect upstream depth estimator:
/// dropout, ghost returns, range noise, quantization.
struct CorruptionSpec {
  double dropout = 0.3;        // probability a valid pixel is dropped
  double ghost = 0.02;         // probability an empty pixel gains a ghost
  double ghost_delta_cm = 50;  // ghosts drawn over the depth span +- delta
  double sigma_cm = 3;         // additive Gaussian range noise
  double quant_step_cm = 1;    // range quantization step (0 = off)

  void validate() const;

  static CorruptionSpec none() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
};

/// Pinhole z-buffer splatting: every point projects to its nearest pixel and
/// each pixel keeps the minimum range. Points behind the camera, outside the
/// frustum or beyond max_range are discarded.
DepthImage render_depth(const PointCloud& cloud, const Viewpoint& view,
                        double max_range_cm = 2000.0);

DepthImage corrupt_depth(const DepthImage& img, const CorruptionSpec& spec, Rng& rng);

/// Inverse pinhole projection of every valid pixel into the world frame.
/// Throws EmptyView when no pixel carries a return.
PointCloud backproject(const DepthImage& img);

/// Union of per-view clouds resampled to exactly n points (farthest-point
/// start at the point farthest from the centroid, so the result does not
/// depend on the view order).
PointCloud fuse_views(const std::vector<PointCloud>& clouds, std::size_t n, Rng& rng);

// .dimg binary format (little-endian): magic "DIMG", u32 H, u32 W,
// f32 ranges row-major (sentinel -1.0), then the viewpoint record:
// position f32x3, rotation f32x9 row-major, intrinsics f32x4
// (focal, cx, cy, max_range).
void write_dimg(const std::filesystem::path& path, const DepthImage& img);
DepthImage read_dimg(const std::filesystem::path& path);

}  // namespace dp
