#pragma once

#include "dp/types.hpp"

#include <vector>

namespace dp {

/// Bijection between two equal-size clouds plus its mean pair distance (cm).
struct Matching {
  std::vector<std::size_t> phi;  // phi[i]: index in s2 matched to s1[i]
  double mean_cost = 0.0;

  bool is_bijection() const;
};

/// Hard cap for the O(n^3) exact solver.
inline constexpr std::size_t kEmdExactMaxPoints = 2048;

/// Optimal assignment minimizing the mean Euclidean pair distance
/// (Jonker-Volgenant shortest augmenting paths, O(n^3)).
Matching emd_exact(const PointCloud& s1, const PointCloud& s2);

/// Epsilon-scaling schedule for the auction solver.
struct AuctionSchedule {
  double eps0_divisor = 8.0;   // eps0 = max pair cost / divisor
  double eps_decay = 4.0;      // eps /= decay per round
  double eps_floor = 1e-9;
  std::size_t max_total_bids = 0;  // 0: derive from n
};

/// Forward-auction assignment with epsilon scaling. Complete bijection with
/// cost within n*eps_floor of optimal; deterministic given input order.
/// Throws ApproxFailure (carrying the best bijection found) if the bid
/// budget is exhausted.
Matching emd_approx(const PointCloud& s1, const PointCloud& s2,
                    const AuctionSchedule& schedule = {});

/// Exact solver up to `exact_max_n` points, auction above it.
Matching emd_match(const PointCloud& s1, const PointCloud& s2,
                   std::size_t exact_max_n = 256);

/// Gradient of the mean pair distance wrt s_pred with the bijection held
/// fixed: (1/n) (p_i - q_phi(i)) / ||p_i - q_phi(i)|| per row, zero rows for
/// coincident pairs.
std::vector<Vec3> emd_grad(const PointCloud& s_pred, const PointCloud& s_ref,
                           const Matching& match);

class ApproxFailure : public Error {
public:
  ApproxFailure(const std::string& what, Matching best)
      : Error(what), best_found(std::move(best)) {}
  Matching best_found;
};

}  // namespace dp
