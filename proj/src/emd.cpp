#include "dp/emd.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>

namespace dp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const PointCloud& s1, const PointCloud& s2, const char* who) {
  if (s1.empty() || s2.empty()) throw InvalidInput(std::string(who) + ": empty cloud");
  if (s1.size() != s2.size())
    throw SizeMismatch(std::string(who) + ": clouds must have equal point counts (" +
                       std::to_string(s1.size()) + " vs " + std::to_string(s2.size()) + ")");
}

std::vector<double> cost_matrix(const PointCloud& s1, const PointCloud& s2) {
  const std::size_t n = s1.size();
  std::vector<double> c(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = distance(s1[i], s2[j]);
  return c;
}

double mean_cost_of(const PointCloud& s1, const PointCloud& s2,
                    const std::vector<std::size_t>& phi) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s1.size(); ++i) sum += distance(s1[i], s2[phi[i]]);
  return sum / static_cast<double>(s1.size());
}

}  // namespace

bool Matching::is_bijection() const {
  std::vector<bool> seen(phi.size(), false);
  for (std::size_t j : phi) {
    if (j >= phi.size() || seen[j]) return false;
    seen[j] = true;
  }
  return true;
}

Matching emd_exact(const PointCloud& s1, const PointCloud& s2) {
  check_pair(s1, s2, "emd_exact");
  const std::size_t n = s1.size();
  if (n > kEmdExactMaxPoints)
    throw TooLarge("emd_exact: " + std::to_string(n) + " points exceeds the O(n^3) guard of " +
                   std::to_string(kEmdExactMaxPoints));

  const std::vector<double> cost = cost_matrix(s1, s2);
  const auto c = [&](std::size_t i, std::size_t j) { return cost[i * n + j]; };

  // Shortest augmenting paths with dual potentials, 1-indexed over columns.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> col_row(n + 1, 0);  // col_row[j]: row (1-based) matched to column j
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    col_row[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = col_row[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[col_row[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_row[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      col_row[j0] = col_row[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Matching m;
  m.phi.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) m.phi[col_row[j] - 1] = j - 1;
  m.mean_cost = mean_cost_of(s1, s2, m.phi);
  return m;
}

Matching emd_approx(const PointCloud& s1, const PointCloud& s2,
                    const AuctionSchedule& schedule) {
  check_pair(s1, s2, "emd_approx");
  const std::size_t n = s1.size();
  const std::vector<double> cost = cost_matrix(s1, s2);

  double max_cost = 0.0;
  for (double x : cost) max_cost = std::max(max_cost, x);

  std::vector<double> price(n, 0.0);
  std::vector<std::size_t> owner(n, n), assigned(n, n);  // n = unassigned
  const std::size_t bid_budget =
      schedule.max_total_bids ? schedule.max_total_bids : 4000 * n + 2000000;
  std::size_t bids = 0;

  const auto finish = [&](bool converged) {
    // Pair any leftovers in index order so the result is always a bijection.
    std::deque<std::size_t> free_objects;
    for (std::size_t j = 0; j < n; ++j)
      if (owner[j] == n) free_objects.push_back(j);
    for (std::size_t i = 0; i < n; ++i)
      if (assigned[i] == n) {
        assigned[i] = free_objects.front();
        free_objects.pop_front();
      }
    Matching m;
    m.phi = assigned;
    m.mean_cost = mean_cost_of(s1, s2, m.phi);
    if (!converged)
      throw ApproxFailure("emd_approx: bid budget exhausted before convergence", std::move(m));
    return m;
  };

  if (max_cost == 0.0) return finish(true);  // identical clouds: any pairing is optimal

  double eps = max_cost / schedule.eps0_divisor;
  bool last_round = false;
  while (true) {
    if (eps <= schedule.eps_floor) {
      eps = schedule.eps_floor;
      last_round = true;
    }
    // New round: assignments reset, prices kept (warm start).
    std::fill(owner.begin(), owner.end(), n);
    std::fill(assigned.begin(), assigned.end(), n);
    std::deque<std::size_t> queue(n);
    std::iota(queue.begin(), queue.end(), std::size_t{0});

    while (!queue.empty()) {
      if (++bids > bid_budget) return finish(false);
      const std::size_t i = queue.front();
      queue.pop_front();
      // Benefits are negated costs; find best and second-best values.
      const double* row = cost.data() + i * n;
      std::size_t best_j = 0;
      double best_v = -kInf, second_v = -kInf;
      for (std::size_t j = 0; j < n; ++j) {
        const double value = -row[j] - price[j];
        if (value > best_v) {
          second_v = best_v;
          best_v = value;
          best_j = j;
        } else if (value > second_v) {
          second_v = value;
        }
      }
      const double increment = (second_v == -kInf ? eps : best_v - second_v + eps);
      price[best_j] += increment;
      if (owner[best_j] != n) {
        assigned[owner[best_j]] = n;
        queue.push_back(owner[best_j]);
      }
      owner[best_j] = i;
      assigned[i] = best_j;
    }

    if (last_round) break;
    eps /= schedule.eps_decay;
  }
  return finish(true);
}

Matching emd_match(const PointCloud& s1, const PointCloud& s2, std::size_t exact_max_n) {
  if (s1.size() <= exact_max_n) return emd_exact(s1, s2);
  return emd_approx(s1, s2);
}

std::vector<Vec3> emd_grad(const PointCloud& s_pred, const PointCloud& s_ref,
                           const Matching& match) {
  check_pair(s_pred, s_ref, "emd_grad");
  if (match.phi.size() != s_pred.size() || !match.is_bijection())
    throw InvalidInput("emd_grad: matching is not a bijection over the clouds");
  const std::size_t n = s_pred.size();
  std::vector<Vec3> grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 diff = s_pred[i] - s_ref[match.phi[i]];
    const double d = diff.norm();
    if (d > 0.0) grad[i] = diff / (d * static_cast<double>(n));
  }
  return grad;
}

}  // namespace dp
