#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flowguard/clustering.hpp"
#include "flowguard/detector.hpp"
#include "flowguard/evaluation.hpp"
#include "flowguard/features.hpp"

namespace flowguard {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);  // throws Error(ParseError)

/// Splits one unquoted CSV line on commas.
std::vector<std::string> split_csv_line(std::string_view line);

// Feature CSV: src,sport,dst,dport,proto,start_us,end_us,n_pkts followed by
// the 34 fwd_/bwd_ feature columns. `src` is the flow sender.
void write_features_csv(std::ostream& out, std::span<const FeatureVector> vectors);
void write_features_csv(const std::filesystem::path& path, std::span<const FeatureVector> vectors);

struct FeatureTable {
  std::vector<FeatureMeta> meta;
  Matrix values;  // one row per segment, kFeatureDims columns
};

/// Throws Error(DimensionMismatch) when the file does not carry exactly the
/// 34 canonical feature columns, Error(ParseError) on malformed rows.
FeatureTable read_features_csv(std::istream& in);
FeatureTable read_features_csv(const std::filesystem::path& path);

// Results CSV: the feature meta columns followed by
// verdict,distance,nearest_cluster,threshold.
void write_results_csv(std::ostream& out, std::span<const FeatureMeta> meta, std::span<const DetectionResult> results);

struct ResultTable {
  std::vector<FeatureMeta> meta;
  std::vector<DetectionResult> results;
};
ResultTable read_results_csv(const std::filesystem::path& path);

// Label CSV: src_ip,dst_ip,dst_port,start_us,end_us,label,scenario; empty
// address or port cells are wildcards.
void write_labels_csv(std::ostream& out, const LabelSpec& spec);
LabelSpec read_labels_csv(std::istream& in);
LabelSpec read_labels_csv(const std::filesystem::path& path);

/// Two columns: rank (1-based), distance.
void write_kdistance_csv(std::ostream& out, const KDistanceCurve& curve);

}  // namespace flowguard
