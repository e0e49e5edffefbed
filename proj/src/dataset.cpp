#include "dp/dataset.hpp"

#include "dp/ply.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace dp {

namespace {
constexpr double kDegToRad = 0.01745329251994329576923690768489;
}

void DatasetConfig::validate() const {
  if (out_dir.empty()) throw InvalidConfig("dataset: output directory not set");
  if (num_models < 1 || num_models > kNumShapeFamilies)
    throw InvalidConfig("dataset: num_models must be in 1.." +
                        std::to_string(kNumShapeFamilies));
  if (per_model < 1) throw InvalidConfig("dataset: per_model must be >= 1");
  if (test_total < 0 || test_total > total())
    throw InvalidConfig("dataset: test split exceeds the sample total");
  for (int model = 0; model < num_models; ++model)
    if (test_count_for_model(model) > per_model)
      throw InvalidConfig("dataset: test split exceeds one model's samples");
  if (num_views < 1) throw InvalidConfig("dataset: need at least one view");
  if (num_points < 1 || render_points < num_points)
    throw InvalidConfig("dataset: point counts must satisfy render_points >= num_points >= 1");
  if (image_size < 8) throw InvalidConfig("dataset: image_size must be >= 8");
  if (!(focal_px > 0) || !(view_range_cm > 0) || !(max_range_cm > 0))
    throw InvalidConfig("dataset: focal, view range and max range must be positive");
  corruption.validate();
}

std::vector<const ManifestEntry*> DatasetManifest::split(const std::string& tag) const {
  std::vector<const ManifestEntry*> out;
  for (const ManifestEntry& e : entries)
    if (e.split == tag) out.push_back(&e);
  return out;
}

void DatasetManifest::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("manifest: cannot open '" + path.string() + "'");
  os << "# deeppoint dataset manifest v1\n";
  os << "# seed " << seed << " views " << num_views << " points " << num_points << "\n";
  os << "# columns: id model seed split dir\n";
  for (const ManifestEntry& e : entries)
    os << e.id << ' ' << e.model << ' ' << e.seed << ' ' << e.split << ' ' << e.dir << '\n';
  if (!os) throw IoError("manifest: write failed for '" + path.string() + "'");
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("manifest: cannot open '" + path.string() + "'");
  DatasetManifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream iss(line);
      std::string hash, key;
      iss >> hash >> key;
      if (key == "seed") iss >> m.seed >> key >> m.num_views >> key >> m.num_points;
      continue;
    }
    std::istringstream iss(line);
    ManifestEntry e;
    if (!(iss >> e.id >> e.model >> e.seed >> e.split >> e.dir))
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": malformed manifest line");
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty())
    throw ParseError(path.string() + ": manifest lists no samples");
  return m;
}

std::vector<Viewpoint> make_view_ring(const DatasetConfig& cfg) {
  std::vector<Viewpoint> views;
  const double elevation = cfg.view_elevation_deg * kDegToRad;
  for (int v = 0; v < cfg.num_views; ++v) {
    const double azimuth = (2.0 * 3.14159265358979323846 * v) / cfg.num_views;
    const Vec3 pos{cfg.view_range_cm * std::cos(elevation) * std::cos(azimuth),
                   cfg.view_range_cm * std::cos(elevation) * std::sin(azimuth),
                   cfg.view_range_cm * std::sin(elevation)};
    views.push_back(
        Viewpoint::look_at(pos, Vec3{0, 0, 0}, cfg.focal_px, cfg.image_size, cfg.image_size));
  }
  return views;
}

DatasetManifest build_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(cfg.out_dir) && !fs::is_empty(cfg.out_dir, ec)) {
    if (!cfg.force)
      throw IoError("dataset: output directory '" + cfg.out_dir.string() +
                    "' already exists (use force to overwrite)");
    fs::remove_all(cfg.out_dir, ec);
    if (ec) throw IoError("dataset: cannot clear '" + cfg.out_dir.string() + "'");
  }
  fs::create_directories(cfg.out_dir, ec);
  if (ec || !fs::is_directory(cfg.out_dir))
    throw IoError("dataset: cannot create '" + cfg.out_dir.string() + "'");

  const Rng master(cfg.seed);
  const std::vector<Viewpoint> views = make_view_ring(cfg);

  DatasetManifest manifest;
  manifest.root = cfg.out_dir;
  manifest.num_views = cfg.num_views;
  manifest.num_points = cfg.num_points;
  manifest.seed = cfg.seed;

  for (int model = 0; model < cfg.num_models; ++model) {
    const int test_here = cfg.test_count_for_model(model);
    for (int k = 0; k < cfg.per_model; ++k) {
      const std::uint64_t sample_stream =
          static_cast<std::uint64_t>(model) * 1000003ull + static_cast<std::uint64_t>(k);
      Rng rng = master.child(sample_stream);

      char id[32];
      std::snprintf(id, sizeof(id), "m%d_%04d", model, k);
      const fs::path dir = cfg.out_dir / id;
      fs::create_directories(dir, ec);
      if (ec) throw IoError("dataset: cannot create sample dir '" + dir.string() + "'");

      const SceneSpec scene = make_scene(model, rng.child(1));
      Rng rng_surface = rng.child(2);
      const PointCloud dense =
          sample_surface(scene, static_cast<std::size_t>(cfg.render_points), rng_surface);
      Rng rng_truth = rng.child(3);
      const PointCloud p_true =
          resample(dense, static_cast<std::size_t>(cfg.num_points), rng_truth);

      std::vector<PointCloud> view_clouds;
      for (std::size_t v = 0; v < views.size(); ++v) {
        const DepthImage depth = render_depth(dense, views[v], cfg.max_range_cm);
        Rng rng_view = rng.child(100 + v);
        const DepthImage corrupted = corrupt_depth(depth, cfg.corruption, rng_view);
        write_dimg(dir / ("view_" + std::to_string(v) + ".dimg"), corrupted);
        if (corrupted.valid_count() > 0) view_clouds.push_back(backproject(corrupted));
      }
      Rng rng_fuse = rng.child(4);
      const PointCloud p_r =
          fuse_views(view_clouds, static_cast<std::size_t>(cfg.num_points), rng_fuse);

      write_ply(dir / "p_r.ply", p_r);
      write_ply(dir / "p_true.ply", p_true);

      ManifestEntry e;
      e.id = id;
      e.model = model;
      e.seed = rng.seed();
      e.split = (k >= cfg.per_model - test_here) ? "test" : "train";
      e.dir = id;
      manifest.entries.push_back(std::move(e));
    }
  }
  manifest.save(cfg.out_dir / "manifest.txt");
  return manifest;
}

std::vector<SamplePair> load_split(const DatasetManifest& manifest, const std::string& tag,
                                   int num_points) {
  std::vector<SamplePair> out;
  const Rng rng(manifest.seed ^ 0x10ad5a17ull);
  std::size_t index = 0;
  for (const ManifestEntry* e : manifest.split(tag)) {
    SamplePair s;
    s.id = e->id;
    s.p_r = read_ply(manifest.root / e->dir / "p_r.ply");
    s.p_true = read_ply(manifest.root / e->dir / "p_true.ply");
    if (num_points > 0) {
      const std::size_t n = static_cast<std::size_t>(num_points);
      if (s.p_r.size() != n) {
        Rng r = rng.child(2 * index);
        s.p_r = resample(s.p_r, n, r);
      }
      if (s.p_true.size() != n) {
        Rng r = rng.child(2 * index + 1);
        s.p_true = resample(s.p_true, n, r);
      }
    }
    out.push_back(std::move(s));
    ++index;
  }
  return out;
}

}  // namespace dp
