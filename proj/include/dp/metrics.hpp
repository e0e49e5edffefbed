#pragma once

#include "dp/types.hpp"

#include <vector>

namespace dp {

/// Symmetric Chamfer distance in cm: mean nearest-neighbor distance from S1
/// to S2 plus the reverse term. Distances are plain Euclidean norms, not
/// squared. kd-tree accelerated; bit-identical to the brute-force double loop.
double chamfer(const PointCloud& s1, const PointCloud& s2);

/// Gradient of chamfer(s_pred, s_ref) with respect to s_pred, with the
/// nearest-neighbor assignments of both terms held fixed. One row per
/// predicted point. Exact ties contribute the lowest-index subgradient.
std::vector<Vec3> chamfer_grad(const PointCloud& s_pred, const PointCloud& s_ref);

/// Threshold F-score: precision = fraction of predicted points within tau of
/// the reference, recall = the reverse, F = 2PR/(P+R) (0 when P+R = 0).
double fscore(const PointCloud& s_pred, const PointCloud& s_ref, double tau_cm);

}  // namespace dp
