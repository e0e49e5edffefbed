#pragma once

#include "dp/types.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace dp {

/// Static 3D kd-tree over a point cloud. Nearest-neighbor queries return the
/// same (distance, index) pair a linear scan with lowest-index tie-breaking
/// would: squared distances go through squared_distance() in both paths and
/// ties prefer the lower original index.
class KdTree {
public:
  explicit KdTree(const PointCloud& cloud) : pts_(cloud.points) {
    if (pts_.empty()) throw InvalidInput("KdTree: empty cloud");
    index_.resize(pts_.size());
    std::iota(index_.begin(), index_.end(), std::size_t{0});
    nodes_.reserve(pts_.size());
    root_ = build(0, pts_.size());
  }

  struct Hit {
    double d2 = 0.0;
    std::size_t index = 0;
  };

  Hit nearest(const Vec3& q) const {
    Hit best{std::numeric_limits<double>::infinity(), pts_.size()};
    search(root_, q, best);
    return best;
  }

  /// True if any point lies within radius r of q (<= comparison).
  bool any_within(const Vec3& q, double r) const {
    const Hit h = nearest(q);
    return std::sqrt(h.d2) <= r;
  }

private:
  struct Node {
    Vec3 point;
    std::size_t index;   // original index in the cloud
    int axis;
    int left = -1, right = -1;
  };

  int build(std::size_t lo, std::size_t hi) {
    if (lo >= hi) return -1;
    // Split on the widest axis of the current subset.
    Vec3 mn = pts_[index_[lo]], mx = mn;
    for (std::size_t i = lo; i < hi; ++i) {
      const Vec3& p = pts_[index_[i]];
      mn = {std::min(mn.x, p.x), std::min(mn.y, p.y), std::min(mn.z, p.z)};
      mx = {std::max(mx.x, p.x), std::max(mx.y, p.y), std::max(mx.z, p.z)};
    }
    const Vec3 ext = mx - mn;
    int axis = 0;
    if (ext.y > ext[axis]) axis = 1;
    if (ext.z > ext[axis]) axis = 2;

    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(index_.begin() + lo, index_.begin() + mid, index_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                       if (pts_[a][axis] != pts_[b][axis]) return pts_[a][axis] < pts_[b][axis];
                       return a < b;
                     });
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{pts_[index_[mid]], index_[mid], axis});
    const int l = build(lo, mid);
    const int r = build(mid + 1, hi);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void search(int id, const Vec3& q, Hit& best) const {
    if (id < 0) return;
    const Node& node = nodes_[id];
    const double d2 = squared_distance(q, node.point);
    if (d2 < best.d2 || (d2 == best.d2 && node.index < best.index)) {
      best.d2 = d2;
      best.index = node.index;
    }
    const double diff = q[node.axis] - node.point[node.axis];
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    search(near, q, best);
    // <= keeps equal-distance candidates reachable for the index tie-break.
    if (diff * diff <= best.d2) search(far, q, best);
  }

  std::vector<Vec3> pts_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace dp
