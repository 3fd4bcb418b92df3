#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "flowguard/matrix.hpp"

namespace flowguard {

struct Neighbor {
  double distance = 0.0;
  std::size_t index = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
  /// Orders by distance, then by lower point index.
  friend bool operator<(const Neighbor& a, const Neighbor& b) noexcept {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  }
};

/// Static k-d tree over an owned point set. Distances are computed with
/// flowguard::euclidean, so query results are exactly those of a linear
/// scan; the tree only prunes boxes that provably cannot contribute.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(Matrix points, std::size_t leaf_size = 16);

  const Matrix& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.rows(); }
  std::size_t dims() const noexcept { return points_.cols(); }

  /// Indices of all points p with euclidean(q, p) <= radius, ascending.
  std::vector<std::size_t> radius(std::span<const double> q, double radius) const;
  std::size_t count_within(std::span<const double> q, double radius) const;

  /// The k nearest points, ordered by (distance, index). k is clamped to size().
  std::vector<Neighbor> knn(std::span<const double> q, std::size_t k) const;

  /// Nearest point; ties go to the lowest index. Requires size() > 0.
  Neighbor nearest(std::span<const double> q) const;

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // range in order_
    std::size_t left = 0, right = 0;  // child node ids, 0 for leaves
    std::size_t box = 0;             // offset of lo/hi arrays in boxes_
  };

  std::size_t build(std::size_t begin, std::size_t end);
  double box_distance(const Node& n, std::span<const double> q) const noexcept;

  template <typename Visit>
  void visit_radius(std::size_t node, std::span<const double> q, double radius, Visit&& visit) const;

  Matrix points_;
  std::size_t leaf_size_ = 16;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;  // per node: dims lows followed by dims highs
};

}  // namespace flowguard
