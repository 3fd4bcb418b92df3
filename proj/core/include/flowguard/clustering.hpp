#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flowguard/matrix.hpp"

namespace flowguard {

inline constexpr int kNoise = -1;

/// Cluster labels, -1 for noise. Clusters are numbered 0..n_clusters-1 in
/// order of their first member's point index.
struct ClusterAssignment {
  std::vector<int> labels;
  std::size_t n_clusters = 0;
  std::size_t n_noise = 0;

  /// Renumbers clusters by first appearance and recomputes the counts.
  static ClusterAssignment from_labels(std::vector<int> labels);

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

/// DBSCAN with Euclidean distance. A point's neighbourhood includes itself;
/// clusters are seeded in ascending point-index order, and a border point
/// reachable from several clusters joins the first one seeded.
ClusterAssignment dbscan(const Matrix& points, double eps, std::size_t min_samples);

/// HDBSCAN: core distance to the min_samples-th nearest neighbour (self
/// included), mutual-reachability minimum spanning tree, condensed tree with
/// min_cluster_size, excess-of-mass selection. The root is selected only
/// when it never splits into two clusters, so a structureless point set
/// comes back as one cluster.
ClusterAssignment hdbscan(const Matrix& points, std::size_t min_cluster_size, std::size_t min_samples);

/// Mean silhouette over non-noise points. Members of singleton clusters
/// score 0; a = b = 0 scores 0. Throws Error(SingleCluster) with fewer than
/// two clusters.
double silhouette(const Matrix& points, std::span<const int> labels);

/// Density-Based Clustering Validation index (Moulavi et al. 2014). Noise
/// points count towards the total weight but contribute no validity.
/// Throws Error(DegenerateClustering) unless there are >= 2 clusters each
/// with >= 2 members.
double dbcv(const Matrix& points, std::span<const int> labels);

struct KDistanceCurve {
  std::size_t k = 0;
  std::vector<double> distances;  // ascending
};

/// Distance of every point to its k-th nearest other point, sorted.
/// Throws Error(KTooLarge) unless 1 <= k < n.
KDistanceCurve k_distance(const Matrix& points, std::size_t k);

/// Mean of all pairwise Euclidean distances; above `exact_limit` points the
/// mean is taken over a seeded uniform sample of `exact_limit` points.
/// Throws Error(TooFewPoints) for n < 2.
double mean_pairwise_distance(const Matrix& points, std::size_t exact_limit = 20000, std::uint64_t seed = 0x5EED);

}  // namespace flowguard
