#include "dp/depth.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace dp {

std::size_t DepthImage::valid_count() const {
  std::size_t n = 0;
  for (double r : ranges)
    if (r != kNoReturn) ++n;
  return n;
}

void CorruptionSpec::validate() const {
  if (dropout < 0 || dropout > 1 || ghost < 0 || ghost > 1)
    throw InvalidInput("CorruptionSpec: probabilities must be in [0, 1]");
  if (ghost_delta_cm < 0 || sigma_cm < 0 || quant_step_cm < 0)
    throw InvalidInput("CorruptionSpec: sigma, delta and step must be >= 0");
}

Viewpoint Viewpoint::look_at(const Vec3& position, const Vec3& target, double focal,
                             int height, int width) {
  Vec3 forward = target - position;
  const double len = forward.norm();
  if (len == 0.0) throw InvalidInput("look_at: camera position equals target");
  forward = forward / len;
  Vec3 up_ref{0, 0, 1};
  if (std::abs(forward.dot(up_ref)) > 1.0 - 1e-9) up_ref = {1, 0, 0};
  Vec3 right = forward.cross(up_ref);
  right = right / right.norm();
  const Vec3 down = forward.cross(right);  // camera y points down in world

  Viewpoint v;
  v.position = position;
  for (int r = 0; r < 3; ++r) {
    v.rotation(r, 0) = right[r];
    v.rotation(r, 1) = down[r];
    v.rotation(r, 2) = forward[r];
  }
  v.focal_px = focal;
  v.height = height;
  v.width = width;
  v.cx = 0.5 * width;
  v.cy = 0.5 * height;
  v.validate();
  return v;
}

DepthImage render_depth(const PointCloud& cloud, const Viewpoint& view, double max_range_cm) {
  if (cloud.empty()) throw InvalidInput("render_depth: empty cloud");
  view.validate();
  DepthImage img(view, max_range_cm);
  for (const Vec3& p : cloud.points) {
    const Vec3 cam = view.world_to_camera(p);
    if (cam.z <= 0.0) continue;
    const double u = view.focal_px * cam.x / cam.z + view.cx;
    const double v = view.focal_px * cam.y / cam.z + view.cy;
    const long col = std::lround(u);
    const long row = std::lround(v);
    if (col < 0 || col >= view.width || row < 0 || row >= view.height) continue;
    const double range = cam.norm();
    if (range > max_range_cm) continue;
    double& cell = img.at(static_cast<int>(row), static_cast<int>(col));
    if (cell == kNoReturn || range < cell) cell = range;
  }
  return img;
}

namespace {

double quantize_clamp(double value, const CorruptionSpec& spec, double max_range) {
  if (spec.quant_step_cm > 0)
    value = std::round(value / spec.quant_step_cm) * spec.quant_step_cm;
  const double floor = spec.quant_step_cm > 0 ? spec.quant_step_cm : 1e-6;
  return std::clamp(value, floor, max_range);
}

}  // namespace

DepthImage corrupt_depth(const DepthImage& img, const CorruptionSpec& spec, Rng& rng) {
  spec.validate();

  // Ghost ranges are drawn over the image's pre-corruption depth span.
  double span_lo = 0.0, span_hi = img.max_range;
  bool any_valid = false;
  for (double r : img.ranges) {
    if (r == kNoReturn) continue;
    if (!any_valid) {
      span_lo = span_hi = r;
      any_valid = true;
    } else {
      span_lo = std::min(span_lo, r);
      span_hi = std::max(span_hi, r);
    }
  }

  DepthImage out = img;
  for (double& cell : out.ranges) {
    if (cell != kNoReturn) {
      if (spec.dropout > 0 && rng.uniform() < spec.dropout) {
        cell = kNoReturn;
        continue;
      }
      double value = cell;
      if (spec.sigma_cm > 0) value += rng.normal(spec.sigma_cm);
      if (spec.sigma_cm > 0 || spec.quant_step_cm > 0)
        value = quantize_clamp(value, spec, img.max_range);
      cell = value;
    } else if (spec.ghost > 0 && rng.uniform() < spec.ghost) {
      double value = rng.uniform(span_lo - spec.ghost_delta_cm, span_hi + spec.ghost_delta_cm);
      value = quantize_clamp(value, spec, img.max_range);
      cell = value;
    }
  }
  return out;
}

PointCloud backproject(const DepthImage& img) {
  img.view.validate();
  PointCloud cloud;
  for (int row = 0; row < img.height; ++row)
    for (int col = 0; col < img.width; ++col) {
      const double range = img.at(row, col);
      if (range == kNoReturn) continue;
      const Vec3 dir{(col - img.view.cx) / img.view.focal_px,
                     (row - img.view.cy) / img.view.focal_px, 1.0};
      const Vec3 cam = dir * (range / dir.norm());
      cloud.points.push_back(img.view.camera_to_world(cam));
    }
  if (cloud.empty()) throw EmptyView("backproject: image has no returns");
  return cloud;
}

PointCloud fuse_views(const std::vector<PointCloud>& clouds, std::size_t n, Rng& rng) {
  PointCloud merged;
  for (const PointCloud& c : clouds)
    merged.points.insert(merged.points.end(), c.points.begin(), c.points.end());
  if (merged.empty()) throw EmptyView("fuse_views: all views empty");
  return resample(merged, n, rng, FpsStart::FarthestFromCentroid);
}

// --- .dimg IO ---------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              ".dimg format is little-endian; add byte swapping for this platform");

namespace {

constexpr char kDimgMagic[4] = {'D', 'I', 'M', 'G'};

void write_f32(std::ostream& os, double x) {
  const float f = static_cast<float>(x);
  os.write(reinterpret_cast<const char*>(&f), sizeof(f));
}

double read_f32(std::istream& is) {
  float f = 0;
  is.read(reinterpret_cast<char*>(&f), sizeof(f));
  return static_cast<double>(f);
}

}  // namespace

void write_dimg(const std::filesystem::path& path, const DepthImage& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("write_dimg: cannot open '" + path.string() + "'");
  os.write(kDimgMagic, 4);
  const std::uint32_t h = static_cast<std::uint32_t>(img.height);
  const std::uint32_t w = static_cast<std::uint32_t>(img.width);
  os.write(reinterpret_cast<const char*>(&h), 4);
  os.write(reinterpret_cast<const char*>(&w), 4);
  for (double r : img.ranges) write_f32(os, r);
  write_f32(os, img.view.position.x);
  write_f32(os, img.view.position.y);
  write_f32(os, img.view.position.z);
  for (int i = 0; i < 9; ++i) write_f32(os, img.view.rotation.m[i]);
  write_f32(os, img.view.focal_px);
  write_f32(os, img.view.cx);
  write_f32(os, img.view.cy);
  write_f32(os, img.max_range);
  if (!os) throw IoError("write_dimg: write failed for '" + path.string() + "'");
}

DepthImage read_dimg(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("read_dimg: cannot open '" + path.string() + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kDimgMagic, 4) != 0)
    throw ParseError("read_dimg: bad magic in '" + path.string() + "'");
  std::uint32_t h = 0, w = 0;
  is.read(reinterpret_cast<char*>(&h), 4);
  is.read(reinterpret_cast<char*>(&w), 4);
  if (!is || h < 8 || w < 8 || h > 65536 || w > 65536)
    throw ParseError("read_dimg: implausible image size");

  DepthImage img;
  img.height = static_cast<int>(h);
  img.width = static_cast<int>(w);
  img.ranges.resize(static_cast<std::size_t>(h) * w);
  for (double& r : img.ranges) r = read_f32(is);
  img.view.position = {read_f32(is), read_f32(is), read_f32(is)};
  for (int i = 0; i < 9; ++i) img.view.rotation.m[i] = read_f32(is);
  img.view.focal_px = read_f32(is);
  img.view.cx = read_f32(is);
  img.view.cy = read_f32(is);
  img.max_range = read_f32(is);
  img.view.height = img.height;
  img.view.width = img.width;
  if (!is) throw ParseError("read_dimg: truncated file '" + path.string() + "'");
  // The f32 round trip leaves the rotation a hair off orthonormal; repair it
  // so downstream code can hold the strict tolerance.
  if (!img.view.rotation.is_rotation(1e-5))
    throw ParseError("read_dimg: stored rotation is not orthonormal");
  img.view.rotation = img.view.rotation.orthonormalized();
  return img;
}

}  // namespace dp
