#include "dp/metrics.hpp"

#include "dp/kdtree.hpp"

namespace dp {

namespace {

void require_nonempty(const PointCloud& c, const char* who) {
  if (c.empty()) throw InvalidInput(std::string(who) + ": empty cloud");
}

// Mean nearest-neighbor distance from `from` into `tree`, summed in point
// order so kd-tree and brute-force paths agree to the last bit.
double directed_mean_nn(const PointCloud& from, const KdTree& tree) {
  double sum = 0.0;
  for (const Vec3& p : from.points) sum += std::sqrt(tree.nearest(p).d2);
  return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer(const PointCloud& s1, const PointCloud& s2) {
  require_nonempty(s1, "chamfer");
  require_nonempty(s2, "chamfer");
  const KdTree t1(s1), t2(s2);
  return directed_mean_nn(s1, t2) + directed_mean_nn(s2, t1);
}

std::vector<Vec3> chamfer_grad(const PointCloud& s_pred, const PointCloud& s_ref) {
  require_nonempty(s_pred, "chamfer_grad");
  require_nonempty(s_ref, "chamfer_grad");
  const std::size_t n = s_pred.size();
  const std::size_t m = s_ref.size();
  std::vector<Vec3> grad(n);

  // Term 1: (1/n) sum_i ||p_i - nn_ref(p_i)||.
  const KdTree ref_tree(s_ref);
  for (std::size_t i = 0; i < n; ++i) {
    const auto hit = ref_tree.nearest(s_pred[i]);
    const double d = std::sqrt(hit.d2);
    if (d > 0.0)
      grad[i] += (s_pred[i] - s_ref[hit.index]) / (d * static_cast<double>(n));
  }

  // Term 2: (1/m) sum_j ||q_j - nn_pred(q_j)||; gradient lands on the chosen
  // predicted point.
  const KdTree pred_tree(s_pred);
  for (std::size_t j = 0; j < m; ++j) {
    const auto hit = pred_tree.nearest(s_ref[j]);
    const double d = std::sqrt(hit.d2);
    if (d > 0.0)
      grad[hit.index] += (s_pred[hit.index] - s_ref[j]) / (d * static_cast<double>(m));
  }
  return grad;
}

double fscore(const PointCloud& s_pred, const PointCloud& s_ref, double tau_cm) {
  require_nonempty(s_pred, "fscore");
  require_nonempty(s_ref, "fscore");
  if (!(tau_cm > 0.0)) throw InvalidInput("fscore: tau must be positive");

  const KdTree ref_tree(s_ref), pred_tree(s_pred);
  std::size_t hit_pred = 0, hit_ref = 0;
  for (const Vec3& p : s_pred.points)
    if (ref_tree.any_within(p, tau_cm)) ++hit_pred;
  for (const Vec3& q : s_ref.points)
    if (pred_tree.any_within(q, tau_cm)) ++hit_ref;

  const double precision = static_cast<double>(hit_pred) / static_cast<double>(s_pred.size());
  const double recall = static_cast<double>(hit_ref) / static_cast<double>(s_ref.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace dp
