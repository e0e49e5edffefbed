#pragma once

#include "dp/depth.hpp"
#include "dp/scene.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dp {

struct DatasetConfig {
  std::filesystem::path out_dir;
  int num_models = 8;
  int per_model = 200;
  int test_total = 80;  // stratified over models (defaults: 10 per model)
  int num_views = 4;
  int num_points = 1024;      // points in P_r and P_true
  int render_points = 30000;  // dense surface cloud used for rendering
  int image_size = 64;
  double focal_px = 70.0;
  double view_range_cm = 600.0;
  double view_elevation_deg = 15.0;
  double max_range_cm = 2000.0;
  CorruptionSpec corruption;
  std::uint64_t seed = 0;
  bool force = false;  // overwrite an existing dataset directory

  void validate() const;
  int total() const { return num_models * per_model; }
  int train_total() const { return total() - test_total; }
  /// Test samples assigned to one model (round-robin stratification).
  int test_count_for_model(int model) const {
    return test_total / num_models + (model < test_total % num_models ? 1 : 0);
  }
};

struct ManifestEntry {
  std::string id;
  int model = 0;
  std::uint64_t seed = 0;
  std::string split;  // "train" | "test"
  std::string dir;    // sample directory, relative to the manifest
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  // directory containing manifest.txt
  int num_views = 4;
  int num_points = 1024;
  std::uint64_t seed = 0;

  std::vector<const ManifestEntry*> split(const std::string& tag) const;

  void save(const std::filesystem::path& path) const;
  static DatasetManifest load(const std::filesystem::path& path);
};

/// Camera ring used for every sample: num_views poses at equal azimuth steps,
/// fixed elevation, all looking at the world origin.
std::vector<Viewpoint> make_view_ring(const DatasetConfig& cfg);

/// Full pipeline per sample: car scene -> dense surface cloud -> k rendered
/// and corrupted depth views -> backprojected union resampled to n (P_r),
/// plus an n-point ground-truth sampling (P_true). Everything is written
/// under cfg.out_dir; deterministic from cfg.seed.
DatasetManifest build_dataset(const DatasetConfig& cfg);

/// One loaded training pair (raw cm clouds).
struct SamplePair {
  std::string id;
  PointCloud p_r;
  PointCloud p_true;
};

/// Loads the PLY pairs of one split, resampling both clouds to num_points
/// when a different size is requested (seeded per sample index).
std::vector<SamplePair> load_split(const DatasetManifest& manifest, const std::string& tag,
                                   int num_points);

}  // namespace dp
