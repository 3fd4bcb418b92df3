#include "flowguard/clustering.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <string>

#include "flowguard/error.hpp"
#include "flowguard/kdtree.hpp"
#include "flowguard/rng.hpp"

namespace flowguard {

ClusterAssignment ClusterAssignment::from_labels(std::vector<int> labels) {
  ClusterAssignment out;
  std::vector<int> remap;
  for (int& l : labels) {
    if (l < 0) {
      l = kNoise;
      ++out.n_noise;
      continue;
    }
    const auto key = static_cast<std::size_t>(l);
    if (key >= remap.size()) remap.resize(key + 1, -1);
    if (remap[key] < 0) remap[key] = static_cast<int>(out.n_clusters++);
    l = remap[key];
  }
  out.labels = std::move(labels);
  return out;
}

ClusterAssignment dbscan(const Matrix& points, double eps, std::size_t min_samples) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "dbscan on an empty point set");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (min_samples < 1) throw Error(ErrorCode::InvalidArgument, "min_samples must be >= 1");

  const std::size_t n = points.rows();
  const KdTree tree(points);
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i) core[i] = tree.count_within(points.row(i), eps) >= min_samples;

  std::vector<int> labels(n, kNoise);
  int next_cluster = 0;
  std::deque<std::size_t> frontier;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || labels[seed] != kNoise) continue;
    const int cluster = next_cluster++;
    labels[seed] = cluster;
    frontier.push_back(seed);
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      for (std::size_t q : tree.radius(points.row(p), eps)) {
        if (labels[q] != kNoise) continue;
        labels[q] = cluster;
        if (core[q]) frontier.push_back(q);
      }
    }
  }
  return ClusterAssignment::from_labels(std::move(labels));
}

KDistanceCurve k_distance(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (k < 1 || k >= n) {
    throw Error(ErrorCode::KTooLarge, "k must satisfy 1 <= k < n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  const KdTree tree(points);
  KDistanceCurve curve;
  curve.k = k;
  curve.distances.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // k + 1 neighbours: the point itself (or a duplicate of it) takes one slot.
    auto nn = tree.knn(points.row(i), k + 1);
    curve.distances.push_back(nn[k].distance);
  }
  std::sort(curve.distances.begin(), curve.distances.end());
  return curve;
}

double mean_pairwise_distance(const Matrix& points, std::size_t exact_limit, std::uint64_t seed) {
  const std::size_t n = points.rows();
  if (n < 2) throw Error(ErrorCode::TooFewPoints, "mean pairwise distance needs at least two points");

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n > exact_limit && exact_limit >= 2) {
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < exact_limit; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(exact_limit);
    std::sort(idx.begin(), idx.end());
  }

  const std::size_t m = idx.size();
  double total = 0.0;
  for (std::size_t a = 0; a + 1 < m; ++a) {
    double row_sum = 0.0;
    const auto pa = points.row(idx[a]);
    for (std::size_t b = a + 1; b < m; ++b) row_sum += euclidean(pa, points.row(idx[b]));
    total += row_sum;
  }
  const double pairs = static_cast<double>(m) * static_cast<double>(m - 1) / 2.0;
  return total / pairs;
}

}  // namespace flowguard
