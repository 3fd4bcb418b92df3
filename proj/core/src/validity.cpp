#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "flowguard/clustering.hpp"
#include "flowguard/error.hpp"

namespace flowguard {

namespace {

// Members of each non-noise cluster, in ascending point order. Keyed by label.
std::map<int, std::vector<std::size_t>> group_members(std::span<const int> labels) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) groups[labels[i]].push_back(i);
  }
  return groups;
}

void check_lengths(const Matrix& points, std::span<const int> labels) {
  if (points.rows() != labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "labels do not cover the point set");
  }
}

}  // namespace

double silhouette(const Matrix& points, std::span<const int> labels) {
  check_lengths(points, labels);
  const auto groups = group_members(labels);
  if (groups.size() < 2) throw Error(ErrorCode::SingleCluster, "silhouette needs at least two clusters");

  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& [label, members] : groups) {
    for (const std::size_t i : members) {
      ++counted;
      if (members.size() == 1) continue;  // singleton scores 0
      const auto pi = points.row(i);
      double a = 0.0;
      for (const std::size_t j : members) {
        if (j != i) a += euclidean(pi, points.row(j));
      }
      a /= static_cast<double>(members.size() - 1);

      double b = std::numeric_limits<double>::infinity();
      for (const auto& [other, other_members] : groups) {
        if (other == label) continue;
        double sum = 0.0;
        for (const std::size_t j : other_members) sum += euclidean(pi, points.row(j));
        b = std::min(b, sum / static_cast<double>(other_members.size()));
      }
      const double denom = std::max(a, b);
      if (denom > 0.0) total += (b - a) / denom;
    }
  }
  return total / static_cast<double>(counted);
}

namespace {

struct ClusterDensity {
  std::vector<std::size_t> members;
  std::vector<double> core;          // all-points core distance per member
  std::vector<std::size_t> internal;  // positions in `members` of MST-internal vertices
  double sparseness = 0.0;
};

// All-points core distance: (mean over other members of (1/d)^dims)^(-1/dims).
// Evaluated relative to the smallest distance to avoid overflow in high dims.
double all_points_core_distance(const Matrix& points, std::span<const std::size_t> members, std::size_t self,
                                double dims) {
  const auto p = points.row(members[self]);
  std::vector<double> dist;
  dist.reserve(members.size() - 1);
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (j != self) dist.push_back(euclidean(p, points.row(members[j])));
  }
  const double m = *std::min_element(dist.begin(), dist.end());
  if (m == 0.0) return 0.0;  // a duplicate makes the sum infinite
  double acc = 0.0;
  for (double d : dist) acc += std::pow(m / d, dims);
  acc /= static_cast<double>(dist.size());
  return m * std::pow(acc, -1.0 / dims);
}

double mutual_reachability(const Matrix& points, std::size_t a, std::size_t b, double core_a, double core_b) {
  return std::max({core_a, core_b, euclidean(points.row(a), points.row(b))});
}

ClusterDensity analyse_cluster(const Matrix& points, std::vector<std::size_t> members) {
  ClusterDensity c;
  c.members = std::move(members);
  const std::size_t m = c.members.size();
  const auto dims = static_cast<double>(points.cols());
  c.core.resize(m);
  for (std::size_t i = 0; i < m; ++i) c.core[i] = all_points_core_distance(points, c.members, i, dims);

  // Prim over mutual reachability within the cluster.
  struct E {
    std::size_t a, b;
    double w;
  };
  std::vector<E> edges;
  std::vector<char> in_tree(m, 0);
  std::vector<double> key(m, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> parent(m, 0);
  std::size_t current = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < m; ++step) {
    std::size_t best = m;
    for (std::size_t v = 0; v < m; ++v) {
      if (in_tree[v]) continue;
      const double w = mutual_reachability(points, c.members[current], c.members[v], c.core[current], c.core[v]);
      if (w < key[v]) {
        key[v] = w;
        parent[v] = current;
      }
      if (best == m || key[v] < key[best]) best = v;
    }
    in_tree[best] = 1;
    edges.push_back({parent[best], best, key[best]});
    current = best;
  }

  std::vector<std::size_t> degree(m, 0);
  for (const E& e : edges) {
    ++degree[e.a];
    ++degree[e.b];
  }
  std::vector<char> is_internal(m, 0);
  for (std::size_t i = 0; i < m; ++i) is_internal[i] = degree[i] > 1;
  if (std::none_of(is_internal.begin(), is_internal.end(), [](char x) { return x != 0; })) {
    std::fill(is_internal.begin(), is_internal.end(), 1);
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (is_internal[i]) c.internal.push_back(i);
  }

  // Sparseness: largest internal MST edge; all edges when none is internal.
  bool any_internal_edge = false;
  for (const E& e : edges) {
    if (is_internal[e.a] && is_internal[e.b]) {
      c.sparseness = any_internal_edge ? std::max(c.sparseness, e.w) : e.w;
      any_internal_edge = true;
    }
  }
  if (!any_internal_edge) {
    for (const E& e : edges) c.sparseness = std::max(c.sparseness, e.w);
  }
  return c;
}

}  // namespace

double dbcv(const Matrix& points, std::span<const int> labels) {
  check_lengths(points, labels);
  const auto groups = group_members(labels);
  if (groups.size() < 2) throw Error(ErrorCode::DegenerateClustering, "DBCV needs at least two clusters");
  std::vector<ClusterDensity> clusters;
  for (const auto& [label, members] : groups) {
    if (members.size() < 2) {
      throw Error(ErrorCode::DegenerateClustering, "DBCV needs every cluster to have at least two members");
    }
    clusters.push_back(analyse_cluster(points, members));
  }

  const auto total = static_cast<double>(labels.size());
  double score = 0.0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    double separation = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < clusters.size(); ++j) {
      if (j == i) continue;
      for (const std::size_t a : clusters[i].internal) {
        for (const std::size_t b : clusters[j].internal) {
          separation = std::min(separation, mutual_reachability(points, clusters[i].members[a], clusters[j].members[b],
                                                                clusters[i].core[a], clusters[j].core[b]));
        }
      }
    }
    const double sparseness = clusters[i].sparseness;
    const double denom = std::max(separation, sparseness);
    const double validity = denom > 0.0 ? (separation - sparseness) / denom : 0.0;
    score += static_cast<double>(clusters[i].members.size()) / total * validity;
  }
  return score;
}

}  // namespace flowguard
