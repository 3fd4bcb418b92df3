#include "flowguard/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>

namespace flowguard {

namespace {

// Relative slack on pruning bounds. The box bound and the exact distance are
// computed along different rounding paths; the slack keeps pruning strictly
// conservative so results equal those of a linear scan.
constexpr double kPruneSlack = 1e-12;

}  // namespace

KdTree::KdTree(Matrix points, std::size_t leaf_size) : points_(std::move(points)), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  order_.resize(points_.rows());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (points_.rows() > 0) {
    nodes_.reserve(2 * points_.rows() / leaf_size_ + 2);
    build(0, points_.rows());
  }
}

std::size_t KdTree::build(std::size_t begin, std::size_t end) {
  const std::size_t dims = points_.cols();
  const std::size_t id = nodes_.size();
  nodes_.push_back({begin, end, 0, 0, boxes_.size()});
  boxes_.resize(boxes_.size() + 2 * dims);
  double* lo = boxes_.data() + nodes_[id].box;
  double* hi = lo + dims;
  for (std::size_t k = 0; k < dims; ++k) {
    lo[k] = std::numeric_limits<double>::infinity();
    hi[k] = -std::numeric_limits<double>::infinity();
  }
  for (std::size_t i = begin; i < end; ++i) {
    const auto p = points_.row(order_[i]);
    for (std::size_t k = 0; k < dims; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  }
  if (end - begin <= leaf_size_) return id;

  std::size_t split_dim = 0;
  double widest = -1.0;
  for (std::size_t k = 0; k < dims; ++k) {
    if (hi[k] - lo[k] > widest) {
      widest = hi[k] - lo[k];
      split_dim = k;
    }
  }
  if (widest <= 0.0) return id;  // all points identical

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                     const double va = points_(a, split_dim), vb = points_(b, split_dim);
                     return va < vb || (va == vb && a < b);
                   });
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::box_distance(const Node& n, std::span<const double> q) const noexcept {
  const std::size_t dims = points_.cols();
  const double* lo = boxes_.data() + n.box;
  const double* hi = lo + dims;
  double acc = 0.0;
  for (std::size_t k = 0; k < dims; ++k) {
    double d = 0.0;
    if (q[k] < lo[k]) d = lo[k] - q[k];
    else if (q[k] > hi[k]) d = q[k] - hi[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

template <typename Visit>
void KdTree::visit_radius(std::size_t node, std::span<const double> q, double radius, Visit&& visit) const {
  const Node& n = nodes_[node];
  if (box_distance(n, q) > radius * (1.0 + kPruneSlack)) return;
  if (n.left == 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const std::size_t idx = order_[i];
      if (euclidean(q, points_.row(idx)) <= radius) visit(idx);
    }
    return;
  }
  visit_radius(n.left, q, radius, visit);
  visit_radius(n.right, q, radius, visit);
}

std::vector<std::size_t> KdTree::radius(std::span<const double> q, double radius) const {
  std::vector<std::size_t> out;
  if (nodes_.empty()) return out;
  visit_radius(0, q, radius, [&out](std::size_t idx) { out.push_back(idx); });
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t KdTree::count_within(std::span<const double> q, double radius) const {
  std::size_t count = 0;
  if (nodes_.empty()) return count;
  visit_radius(0, q, radius, [&count](std::size_t) { ++count; });
  return count;
}

std::vector<Neighbor> KdTree::knn(std::span<const double> q, std::size_t k) const {
  k = std::min(k, size());
  std::vector<Neighbor> heap;  // max-heap on (distance, index)
  if (k == 0) return heap;
  heap.reserve(k + 1);

  auto worst = [&]() { return heap.front().distance; };
  auto search = [&](auto&& self, std::size_t node) -> void {
    const Node& n = nodes_[node];
    if (heap.size() == k && box_distance(n, q) > worst() * (1.0 + kPruneSlack)) return;
    if (n.left == 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const Neighbor cand{euclidean(q, points_.row(order_[i])), order_[i]};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      return;
    }
    // Descend into the nearer child first.
    const double dl = box_distance(nodes_[n.left], q);
    const double dr = box_distance(nodes_[n.right], q);
    if (dl <= dr) {
      self(self, n.left);
      self(self, n.right);
    } else {
      self(self, n.right);
      self(self, n.left);
    }
  };
  search(search, 0);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

Neighbor KdTree::nearest(std::span<const double> q) const { return knn(q, 1).front(); }

}  // namespace flowguard
