#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flowguard/flow.hpp"

namespace flowguard {

/// Statistics computed per direction, in canonical order.
inline constexpr std::size_t kStatsPerDirection = 17;
inline constexpr std::size_t kFeatureDims = 2 * kStatsPerDirection;

/// Offsets inside one 17-entry direction block.
namespace feat {
inline constexpr std::size_t kIptMean = 0, kIptMax = 1, kIptMin = 2;
inline constexpr std::size_t kSizeMean = 3, kSizeMax = 4, kSizeMin = 5;
inline constexpr std::size_t kTtlMean = 6, kTtlMax = 7, kTtlMin = 8;
inline constexpr std::size_t kWinMean = 9, kWinMax = 10, kWinMin = 11;
inline constexpr std::size_t kSynPct = 12, kAckPct = 13, kPshPct = 14, kRstPct = 15, kFinPct = 16;
inline constexpr std::size_t kForward = 0;
inline constexpr std::size_t kBackward = kStatsPerDirection;
}  // namespace feat

struct FeatureMeta {
  FlowKey key;
  Endpoint sender;
  std::int64_t segment_start_us = 0;
  std::int64_t segment_end_us = 0;
  std::uint64_t packet_count = 0;

  Endpoint receiver() const noexcept { return sender == key.lo ? key.hi : key.lo; }

  friend bool operator==(const FeatureMeta&, const FeatureMeta&) = default;
};

struct FeatureVector {
  std::array<double, kFeatureDims> values{};
  FeatureMeta meta;
};

/// Column names: fwd_ipt_mean ... fwd_fin_pct, bwd_ipt_mean ... bwd_fin_pct.
const std::array<std::string, kFeatureDims>& feature_names();

/// Forward block then backward block. Inter-packet times are in seconds
/// between consecutive packets of the same direction; packet size is the
/// wire length. Throws Error(EmptySegment) on an empty input.
FeatureVector compute_features(std::span<const TaggedPacket> segment);

FeatureVector compute_features(const Segment& segment);

}  // namespace flowguard
