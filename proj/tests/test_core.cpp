#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dp/cloud_ops.hpp"
#include "dp/rng.hpp"
#include "dp/types.hpp"
#include "test_util.hpp"

using namespace dp;
using namespace dp::testutil;

TEST_CASE("rng: equal seeds give bit-identical streams") {
  Rng a(12345), b(12345);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: golden values pin the stream across builds") {
  // Frozen once; a change here means reproducibility across versions broke.
  Rng r(42);
  CHECK(r.next_u64() == 13679457532755275413ull);
  CHECK(r.next_u64() == 2949826092126892291ull);
  CHECK(r.next_u64() == 5139283748462763858ull);
}

TEST_CASE("rng: uniform in [0,1), children independent") {
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  Rng c0 = r.child(0), c1 = r.child(1);
  CHECK(c0.next_u64() != c1.next_u64());
  // child depends only on the seed, not the parent counter
  Rng fresh(7);
  CHECK(fresh.child(0).next_u64() == Rng(7).child(0).next_u64());
}

TEST_CASE("rng: normal has roughly unit scale") {
  Rng r(3);
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sum2 / n - 1.0) < 0.05);
}

TEST_CASE("bounding_box basics") {
  CHECK_THROWS_AS(bounding_box(PointCloud{}), InvalidInput);

  const PointCloud single({{0, 0, 0}});
  const Aabb b1 = bounding_box(single);
  CHECK(b1.min == Vec3{0, 0, 0});
  CHECK(b1.max == Vec3{0, 0, 0});

  const PointCloud two({{1, 2, 3}, {-1, 0, 5}});
  const Aabb b2 = bounding_box(two);
  CHECK(b2.min == Vec3{-1, 0, 3});
  CHECK(b2.max == Vec3{1, 2, 5});
}

TEST_CASE("bounding_box is monotone under adding points") {
  Rng rng(11);
  for (int it = 0; it < 50; ++it) {
    PointCloud c = random_cloud(20, rng, 10.0);
    const Aabb before = bounding_box(c);
    c.points.push_back({rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20)});
    CHECK(bounding_box(c).contains(before));
  }
}

TEST_CASE("normalize: already-normalized pair is unchanged") {
  const PointCloud c({{-1, 0, 0}, {1, 0, 0}});
  const NormalizedCloud n = normalize(c);
  CHECK(n.center == Vec3{0, 0, 0});
  CHECK(n.scale == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(n.cloud[0] == Vec3{-1, 0, 0});
  CHECK(n.cloud[1] == Vec3{1, 0, 0});
}

TEST_CASE("normalize: car-extent scale") {
  const PointCloud c({{0, 0, 0}, {445, 175, 158}});
  const NormalizedCloud n = normalize(c);
  const double want = 0.5 * std::sqrt(445.0 * 445 + 175.0 * 175 + 158.0 * 158);
  CHECK(n.scale == doctest::Approx(want).epsilon(1e-15));
  CHECK(n.scale == doctest::Approx(252.0).epsilon(2e-3));  // ~251.8 cm
}

TEST_CASE("normalize: degenerate cloud throws") {
  PointCloud c;
  for (int i = 0; i < 8; ++i) c.points.push_back({3, -1, 2});
  CHECK_THROWS_AS(normalize(c), DegenerateCloud);
}

TEST_CASE("normalize/denormalize round trip, output box inside [-1,1]^3") {
  Rng rng(5);
  for (int it = 0; it < 100; ++it) {
    const PointCloud c = random_cloud(32, rng, 300.0);
    const NormalizedCloud n = normalize(c);
    const Aabb box = bounding_box(n.cloud);
    CHECK(box.min.x >= -1.0 - 1e-12);
    CHECK(box.max.x <= 1.0 + 1e-12);
    CHECK(box.min.y >= -1.0 - 1e-12);
    CHECK(box.max.y <= 1.0 + 1e-12);
    CHECK(box.min.z >= -1.0 - 1e-12);
    CHECK(box.max.z <= 1.0 + 1e-12);
    const PointCloud back = denormalize(n.cloud, n.center, n.scale);
    for (std::size_t i = 0; i < c.size(); ++i)
      CHECK((back[i] - c[i]).norm() < 1e-9);
  }
}

TEST_CASE("normalize keeps lopsided clouds inside the unit box") {
  // A mean-centered frame would push the far cluster outside [-1,1].
  const PointCloud c({{0, 0, 0}, {2, 0, 0}, {2, 0, 0}, {2, 0, 0}});
  const Aabb box = bounding_box(normalize(c).cloud);
  CHECK(box.min.x >= -1.0);
  CHECK(box.max.x <= 1.0);
}

TEST_CASE("resample: m == n keeps the same point set") {
  Rng rng(1);
  const PointCloud c({{0, 0, 0}, {1, 0, 0}, {0, 2, 0}, {0, 0, 3}});
  const PointCloud out = resample(c, 4, rng);
  CHECK(same_point_set(out, c));
}

TEST_CASE("resample: FPS from (0,0,0) keeps the far point") {
  const PointCloud c({{0, 0, 0}, {100, 0, 0}, {1, 0, 0}});
  // Find a seed whose first index draw lands on point 0, then re-run with a
  // fresh rng so the sampler consumes the same draw.
  std::uint64_t seed = 0;
  for (;; ++seed) {
    Rng probe(seed);
    if (probe.uniform_index(3) == 0) break;
  }
  Rng rng(seed);
  const PointCloud out = resample(c, 2, rng);
  CHECK(same_point_set(out, PointCloud({{0, 0, 0}, {100, 0, 0}})));
}

TEST_CASE("resample: upsampling jitters within 3 sigma almost always") {
  const PointCloud c({{0, 0, 0}, {1000, 1000, 1000}});
  int coords_total = 0, coords_within = 0;
  int exact_copies = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const PointCloud out = resample(c, 3, rng);
    REQUIRE(out.size() == 3);
    const Vec3& p = out[2];  // the generated point
    const Vec3& src = (p - c[0]).squared_norm() < (p - c[1]).squared_norm() ? c[0] : c[1];
    const Vec3 d = p - src;
    for (double comp : {d.x, d.y, d.z}) {
      ++coords_total;
      if (std::abs(comp) <= 1.5) ++coords_within;
    }
    if (d.squared_norm() == 0.0) ++exact_copies;
  }
  CHECK(static_cast<double>(coords_within) / coords_total > 0.985);
  CHECK(exact_copies < 10);  // jitter actually fires
}

TEST_CASE("resample: permutation-invariant set for a fixed start point") {
  Rng rng(17);
  for (int it = 0; it < 20; ++it) {
    const PointCloud c = random_cloud(40, rng, 5.0);
    const auto perm = random_permutation(c.size(), rng);
    const PointCloud shuffled = permuted(c, perm);
    Rng r1(99), r2(99);
    const PointCloud a = resample(c, 12, r1, FpsStart::FarthestFromCentroid);
    const PointCloud b = resample(shuffled, 12, r2, FpsStart::FarthestFromCentroid);
    CHECK(same_point_set(a, b));
  }
}

TEST_CASE("resample: downsampled box stays inside the input box") {
  Rng rng(23);
  for (int it = 0; it < 30; ++it) {
    const PointCloud c = random_cloud(50, rng, 8.0);
    Rng r(it);
    const PointCloud out = resample(c, 10, r);
    CHECK(bounding_box(c).contains(bounding_box(out)));
  }
}

TEST_CASE("resample: errors") {
  Rng rng(0);
  CHECK_THROWS_AS(resample(PointCloud{}, 4, rng), InvalidInput);
  const PointCloud c({{0, 0, 0}});
  CHECK_THROWS_AS(resample(c, 0, rng), InvalidInput);
}

TEST_CASE("viewpoint validation") {
  Viewpoint v;
  CHECK_NOTHROW(v.validate());
  v.height = 4;
  CHECK_THROWS_AS(v.validate(), InvalidInput);
  v.height = 64;
  v.focal_px = 0;
  CHECK_THROWS_AS(v.validate(), InvalidInput);
  v.focal_px = 64;
  v.rotation.m[0] = 2.0;
  CHECK_THROWS_AS(v.validate(), InvalidInput);
}

TEST_CASE("mat3 rotation utilities") {
  Rng rng(2);
  for (int it = 0; it < 20; ++it) {
    const Mat3 r = random_rotation(rng);
    CHECK(r.is_rotation(1e-12));
    const Mat3 rz = Mat3::rotation_z(rng.uniform(-3.0, 3.0));
    CHECK(rz.is_rotation(1e-12));
    // transpose is the inverse
    const Mat3 prod = r * r.transposed();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(prod(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
  }
}
