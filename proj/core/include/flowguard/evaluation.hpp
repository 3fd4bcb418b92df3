#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowguard/detector.hpp"
#include "flowguard/features.hpp"

namespace flowguard {

enum class GroundTruth { Benign, Attack, AttackVector, Effect };

std::string to_string(GroundTruth g);
GroundTruth parse_ground_truth(const std::string& s);  // throws Error(ParseError)

/// One labelling rule. Empty address/port fields are wildcards. A rule
/// matches a segment when its endpoints fit in either orientation and the
/// time intervals share at least one instant.
struct LabelRule {
  std::optional<Ipv4Address> src_ip;
  std::optional<Ipv4Address> dst_ip;
  std::optional<std::uint16_t> dst_port;
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
  GroundTruth label = GroundTruth::Benign;
  std::string scenario;

  bool matches(const FeatureMeta& meta) const noexcept;
  friend bool operator==(const LabelRule&, const LabelRule&) = default;
};

struct LabelSpec {
  std::vector<LabelRule> rules;  // first match wins
};

struct SegmentLabel {
  GroundTruth label = GroundTruth::Benign;
  std::string scenario;  // empty for the default benign label

  friend bool operator==(const SegmentLabel&, const SegmentLabel&) = default;
};

SegmentLabel label_of(const FeatureMeta& meta, const LabelSpec& spec);

struct ScopeMetrics {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;

  void finalize() noexcept;
  friend bool operator==(const ScopeMetrics&, const ScopeMetrics&) = default;
};

struct EvalOptions {
  bool effect_positive = false;  // count effect-labelled segments as positives instead of ignoring them
};

struct EvalReport {
  ScopeMetrics overall;
  std::map<std::string, ScopeMetrics> per_scenario;
  std::size_t ignored_count = 0;
};

/// Positive class = anomaly. Ground truth is positive for attack and
/// attack_vector; effect segments are excluded unless options say otherwise.
/// A scenario scope holds the segments labelled with that scenario plus all
/// benign segments. Throws Error(LengthMismatch).
EvalReport evaluate(std::span<const DetectionResult> results, std::span<const SegmentLabel> labels,
                    const EvalOptions& options = {});

std::string report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

}  // namespace flowguard
