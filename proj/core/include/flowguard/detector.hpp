#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowguard/clustering.hpp"
#include "flowguard/kdtree.hpp"
#include "flowguard/matrix.hpp"
#include "flowguard/scaler.hpp"

namespace flowguard {

inline constexpr int kModelFormatVersion = 1;

struct ModelMeta {
  std::string algo;     // "dbscan" or "hdbscan"
  std::string mode;     // segmentation mode of the training features
  double timespan_s = 0.0;
  std::vector<std::pair<std::string, double>> params;
  std::string created;  // free-form; left empty unless the caller sets it

  friend bool operator==(const ModelMeta&, const ModelMeta&) = default;
};

enum class Verdict { Benign, Anomaly };

struct DetectionResult {
  Verdict verdict = Verdict::Benign;
  double distance = 0.0;        // to the nearest retained training point, scaled space
  int nearest_cluster = 0;
  double threshold = 0.0;       // maximum pairwise distance of that cluster
  std::size_t nearest_index = 0;

  friend bool operator==(const DetectionResult&, const DetectionResult&) = default;
};

/// Benign clusters with their maximum pairwise distance thresholds and a
/// nearest-neighbour index over the retained (non-noise) training points.
/// Immutable once built; classify is safe to call concurrently.
class DetectionModel {
 public:
  DetectionModel(Matrix points, std::vector<int> labels, std::vector<double> mpdi, ScalerParams scaler, ModelMeta meta);

  const Matrix& train_points() const noexcept { return index_.points(); }
  const std::vector<int>& train_labels() const noexcept { return labels_; }
  const std::vector<double>& mpdi() const noexcept { return mpdi_; }
  const ScalerParams& scaler() const noexcept { return scaler_; }
  const ModelMeta& meta() const noexcept { return meta_; }
  const KdTree& index() const noexcept { return index_; }
  std::size_t dims() const noexcept { return scaler_.dims(); }

  /// Classifies a point that is already in scaled space.
  DetectionResult classify_scaled(std::span<const double> scaled) const;

 private:
  KdTree index_;
  std::vector<int> labels_;
  std::vector<double> mpdi_;
  ScalerParams scaler_;
  ModelMeta meta_;
};

/// Maximum pairwise Euclidean distance per cluster (0 for singletons).
std::vector<double> max_pairwise_distances(const Matrix& points, std::span<const int> labels, std::size_t n_clusters);

/// Drops noise points, computes the exact per-cluster thresholds and builds
/// the index. Throws Error(AllNoise) when no cluster survives.
DetectionModel build_model(const Matrix& scaled_points, const ClusterAssignment& assignment, ScalerParams scaler,
                           ModelMeta meta = {});

/// Scales raw_vec, finds the nearest training point (ties: lowest index) and
/// flags an anomaly when the distance exceeds that cluster's threshold.
/// Throws Error(DimensionMismatch).
DetectionResult classify(const DetectionModel& model, std::span<const double> raw_vec);

/// Row-wise classify; a dimension mismatch reports the offending row.
std::vector<DetectionResult> classify_batch(const DetectionModel& model, const Matrix& rows);

/// Versioned JSON with a trailing CRC-32 checksum over the preceding content.
void save_model(const DetectionModel& model, const std::filesystem::path& path);
std::string serialize_model(const DetectionModel& model);

/// Throws Error(VersionMismatch) or Error(CorruptFile).
DetectionModel load_model(const std::filesystem::path& path);
DetectionModel deserialize_model(const std::string& text);

}  // namespace flowguard
