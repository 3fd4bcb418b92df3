#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "flowguard/features.hpp"
#include "flowguard/flow.hpp"
#include "flowguard/matrix.hpp"
#include "flowguard/pcap.hpp"

namespace flowguard {

/// Capture to feature vectors: ingest, segment, compute statistics.
/// Vectors come out in segment emission order.
std::vector<FeatureVector> extract_features(std::span<const PacketRecord> packets, const SegmenterConfig& cfg);
std::vector<FeatureVector> extract_features(PcapReader& reader, const SegmenterConfig& cfg);
std::vector<FeatureVector> extract_features(const std::filesystem::path& pcap, const SegmenterConfig& cfg,
                                            IngestStats* stats = nullptr);

Matrix to_matrix(std::span<const FeatureVector> vectors);
std::vector<FeatureMeta> metas(std::span<const FeatureVector> vectors);

}  // namespace flowguard
