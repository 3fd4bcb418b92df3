#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "flowguard/clustering.hpp"
#include "flowguard/matrix.hpp"

namespace flowguard {

enum class Algorithm { Dbscan, Hdbscan };
enum class ScoreKind { Silhouette, Dbcv };

std::string to_string(Algorithm a);
std::string to_string(ScoreKind s);
Algorithm parse_algorithm(const std::string& s);  // throws Error(InvalidArgument)
ScoreKind parse_score(const std::string& s);

struct GridSpec {
  Algorithm algo = Algorithm::Dbscan;
  std::vector<double> eps_values;               // dbscan
  std::vector<std::size_t> min_cluster_sizes;   // hdbscan
  std::vector<std::size_t> min_samples_values;
  ScoreKind score = ScoreKind::Silhouette;
  std::size_t max_parallel = 1;
  /// Candidates whose estimated working set exceeds this are marked failed
  /// instead of being run. 0 disables the check.
  std::size_t memory_cap_bytes = 0;

  void validate() const;  // throws Error(InvalidArgument)
};

struct CandidateParams {
  double eps = 0.0;                 // dbscan
  std::size_t min_cluster_size = 0;  // hdbscan
  std::size_t min_samples = 0;

  friend bool operator==(const CandidateParams&, const CandidateParams&) = default;
};

struct TuningRow {
  CandidateParams params;
  double score = -std::numeric_limits<double>::infinity();
  bool failed = true;
  std::string failure;  // empty when not failed
  std::size_t n_clusters = 0;
  std::size_t n_noise = 0;
  double wall_time_s = 0.0;
};

/// Equality of reports ignores wall_time_s.
bool same_outcome(const TuningRow& a, const TuningRow& b);

struct TuningReport {
  Algorithm algo = Algorithm::Dbscan;
  ScoreKind score = ScoreKind::Silhouette;
  std::vector<TuningRow> rows;  // candidate order: outer loop eps / min_cluster_size, inner min_samples
  std::size_t best = 0;         // index into rows

  const TuningRow& best_row() const { return rows.at(best); }
  bool same_outcome(const TuningReport& other) const;
};

/// Clusters and scores every candidate. Degenerate clusterings (fewer than
/// two clusters, more than half noise, or an unscorable partition) are
/// recorded as failed with score -inf. Best is the highest score; ties go
/// to the smaller eps / min_cluster_size, then the smaller min_samples.
/// Throws Error(AllCandidatesFailed).
TuningReport grid_search(const Matrix& points, const GridSpec& spec);

/// eps = alpha * mean pairwise distance; min_samples passed through.
/// Throws Error(TooFewPoints) when n < 2 or the resulting eps is 0.
std::pair<double, std::size_t> mpd_params(const Matrix& points, std::size_t min_samples_default = 4, double alpha = 0.1);

/// Knee of a k-distance curve: index with the largest perpendicular
/// distance to the chord from the first to the last point (x = rank).
/// A curve with no deviation from its chord uses the middle index.
/// Returns (0.5, 1.5) times the distance at the knee.
/// Throws Error(CurveTooShort) for fewer than 3 points.
std::pair<double, double> suggest_eps_range(const KDistanceCurve& curve);
std::size_t knee_index(const std::vector<double>& curve);

/// Wall times differ between runs; leave them out for reproducible files.
std::string report_to_json(const TuningReport& report, bool include_timing = true);
std::string report_to_csv(const TuningReport& report, bool include_timing = true);

}  // namespace flowguard
