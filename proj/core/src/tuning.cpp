#include "flowguard/tuning.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <thread>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"
#include "json.hpp"

namespace flowguard {

std::string to_string(Algorithm a) { return a == Algorithm::Dbscan ? "dbscan" : "hdbscan"; }
std::string to_string(ScoreKind s) { return s == ScoreKind::Silhouette ? "silhouette" : "dbcv"; }

Algorithm parse_algorithm(const std::string& s) {
  if (s == "dbscan") return Algorithm::Dbscan;
  if (s == "hdbscan") return Algorithm::Hdbscan;
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm '" + s + "'");
}

ScoreKind parse_score(const std::string& s) {
  if (s == "silhouette") return ScoreKind::Silhouette;
  if (s == "dbcv") return ScoreKind::Dbcv;
  throw Error(ErrorCode::InvalidArgument, "unknown score '" + s + "'");
}

void GridSpec::validate() const {
  if (min_samples_values.empty()) throw Error(ErrorCode::InvalidArgument, "min_samples candidate list is empty");
  for (auto m : min_samples_values) {
    if (m == 0) throw Error(ErrorCode::InvalidArgument, "min_samples candidates must be positive");
  }
  if (algo == Algorithm::Dbscan) {
    if (eps_values.empty()) throw Error(ErrorCode::InvalidArgument, "eps candidate list is empty");
    for (double e : eps_values) {
      if (!(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidArgument, "eps candidates must be positive");
    }
  } else {
    if (min_cluster_sizes.empty()) throw Error(ErrorCode::InvalidArgument, "min_cluster_size candidate list is empty");
    for (auto m : min_cluster_sizes) {
      if (m < 2) throw Error(ErrorCode::InvalidArgument, "min_cluster_size candidates must be >= 2");
    }
  }
  if (max_parallel == 0) throw Error(ErrorCode::InvalidArgument, "max_parallel must be >= 1");
}

bool same_outcome(const TuningRow& a, const TuningRow& b) {
  const bool score_eq = (a.failed && b.failed) || a.score == b.score;
  return a.params == b.params && score_eq && a.failed == b.failed && a.failure == b.failure &&
         a.n_clusters == b.n_clusters && a.n_noise == b.n_noise;
}

bool TuningReport::same_outcome(const TuningReport& other) const {
  if (algo != other.algo || score != other.score || best != other.best || rows.size() != other.rows.size()) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!flowguard::same_outcome(rows[i], other.rows[i])) return false;
  }
  return true;
}

namespace {

std::vector<CandidateParams> expand(const GridSpec& spec) {
  std::vector<CandidateParams> out;
  if (spec.algo == Algorithm::Dbscan) {
    for (double eps : spec.eps_values) {
      for (auto ms : spec.min_samples_values) out.push_back({eps, 0, ms});
    }
  } else {
    for (auto mcs : spec.min_cluster_sizes) {
      for (auto ms : spec.min_samples_values) out.push_back({0.0, mcs, ms});
    }
  }
  return out;
}

// Rough peak working set of one candidate: a copy of the points inside the
// spatial index plus per-point bookkeeping. Every clusterer and score here
// runs in O(n) memory.
std::size_t estimated_bytes(const Matrix& points) {
  return points.rows() * (points.cols() * sizeof(double) * 2 + 96);
}

TuningRow run_candidate(const Matrix& points, const GridSpec& spec, const CandidateParams& params) {
  TuningRow row;
  row.params = params;
  const auto start = std::chrono::steady_clock::now();
  if (spec.memory_cap_bytes != 0 && estimated_bytes(points) > spec.memory_cap_bytes) {
    row.failure = "memory cap";
    return row;
  }
  try {
    const ClusterAssignment a = spec.algo == Algorithm::Dbscan
                                    ? dbscan(points, params.eps, params.min_samples)
                                    : hdbscan(points, params.min_cluster_size, params.min_samples);
    row.n_clusters = a.n_clusters;
    row.n_noise = a.n_noise;
    if (a.n_clusters < 2) {
      row.failure = "single cluster";
    } else if (2 * a.n_noise > a.labels.size()) {
      row.failure = "more than half noise";
    } else {
      row.score = spec.score == ScoreKind::Silhouette ? silhouette(points, a.labels) : dbcv(points, a.labels);
      row.failed = false;
    }
  } catch (const Error& e) {
    row.failure = std::string(to_string(e.code()));
  }
  if (row.failed) row.score = -std::numeric_limits<double>::infinity();
  row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

bool better(const TuningRow& a, const TuningRow& b) {
  if (a.score != b.score) return a.score > b.score;
  const double ka = a.params.eps > 0.0 ? a.params.eps : static_cast<double>(a.params.min_cluster_size);
  const double kb = b.params.eps > 0.0 ? b.params.eps : static_cast<double>(b.params.min_cluster_size);
  if (ka != kb) return ka < kb;
  return a.params.min_samples < b.params.min_samples;
}

}  // namespace

TuningReport grid_search(const Matrix& points, const GridSpec& spec) {
  spec.validate();
  const auto candidates = expand(spec);
  TuningReport report;
  report.algo = spec.algo;
  report.score = spec.score;
  report.rows.resize(candidates.size());

  const std::size_t workers = std::min(spec.max_parallel, candidates.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) report.rows[i] = run_candidate(points, spec, candidates[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < candidates.size(); i = next++) {
          report.rows[i] = run_candidate(points, spec, candidates[i]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    if (report.rows[i].failed) continue;
    if (!best || better(report.rows[i], report.rows[*best])) best = i;
  }
  if (!best) throw Error(ErrorCode::AllCandidatesFailed, "no candidate produced a scorable clustering");
  report.best = *best;
  return report;
}

std::pair<double, std::size_t> mpd_params(const Matrix& points, std::size_t min_samples_default, double alpha) {
  if (points.rows() < 2) throw Error(ErrorCode::TooFewPoints, "mean pairwise distance needs at least two points");
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be positive");
  const double eps = alpha * mean_pairwise_distance(points);
  if (!(eps > 0.0)) throw Error(ErrorCode::TooFewPoints, "all points coincide; eps would be 0");
  return {eps, min_samples_default};
}

std::size_t knee_index(const std::vector<double>& curve) {
  if (curve.size() < 3) throw Error(ErrorCode::CurveTooShort, "k-distance curve needs at least 3 points");
  const double x0 = 0.0, y0 = curve.front();
  const double x1 = static_cast<double>(curve.size() - 1), y1 = curve.back();
  const double dx = x1 - x0, dy = y1 - y0;
  const double norm = std::hypot(dx, dy);
  std::size_t best = 0;
  double best_dist = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double d = std::abs(dy * (static_cast<double>(i) - x0) - dx * (curve[i] - y0)) / norm;
    if (d > best_dist) {
      best_dist = d;
      best = i;
    }
  }
  // Relative tolerance so a linear curve with rounding noise still counts as flat.
  const double scale = std::max({std::abs(y0), std::abs(y1), 1.0});
  if (best_dist <= 1e-12 * scale * static_cast<double>(curve.size())) best = (curve.size() - 1) / 2;
  return best;
}

std::pair<double, double> suggest_eps_range(const KDistanceCurve& curve) {
  const double knee = curve.distances[knee_index(curve.distances)];
  return {knee * 0.5, knee * 1.5};
}

std::string report_to_json(const TuningReport& report, bool include_timing) {
  using nlohmann::ordered_json;
  auto row_json = [&](const TuningRow& r) {
    ordered_json j;
    if (report.algo == Algorithm::Dbscan) j["eps"] = r.params.eps;
    else j["min_cluster_size"] = r.params.min_cluster_size;
    j["min_samples"] = r.params.min_samples;
    j["score"] = r.failed ? ordered_json(nullptr) : ordered_json(r.score);
    j["failed"] = r.failed;
    if (r.failed) j["failure"] = r.failure;
    j["n_clusters"] = r.n_clusters;
    j["n_noise"] = r.n_noise;
    if (include_timing) j["wall_time_s"] = r.wall_time_s;
    return j;
  };
  ordered_json j;
  j["algo"] = to_string(report.algo);
  j["score"] = to_string(report.score);
  j["best"] = row_json(report.best_row());
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string report_to_csv(const TuningReport& report, bool include_timing) {
  std::ostringstream out;
  out << (report.algo == Algorithm::Dbscan ? "eps" : "min_cluster_size") << ",min_samples,score,failed,n_clusters,n_noise"
      << (include_timing ? ",wall_time_s\n" : "\n");
  for (const auto& r : report.rows) {
    if (report.algo == Algorithm::Dbscan) out << format_double(r.params.eps);
    else out << r.params.min_cluster_size;
    out << ',' << r.params.min_samples << ',' << (r.failed ? std::string("-inf") : format_double(r.score)) << ','
        << (r.failed ? 1 : 0) << ',' << r.n_clusters << ',' << r.n_noise;
    if (include_timing) out << ',' << format_double(r.wall_time_s);
    out << '\n';
  }
  return out.str();
}

}  // namespace flowguard
