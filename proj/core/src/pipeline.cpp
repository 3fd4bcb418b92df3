#include "flowguard/pipeline.hpp"

namespace flowguard {

namespace {

void append_features(std::vector<Segment> segments, std::vector<FeatureVector>& out) {
  for (const auto& s : segments) {
    if (!s.packets.empty()) out.push_back(compute_features(s));
  }
}

}  // namespace

std::vector<FeatureVector> extract_features(std::span<const PacketRecord> packets, const SegmenterConfig& cfg) {
  cfg.validate();
  FlowTable table(cfg);
  std::vector<FeatureVector> out;
  for (const auto& p : packets) append_features(table.ingest(p), out);
  append_features(table.flush(), out);
  return out;
}

std::vector<FeatureVector> extract_features(PcapReader& reader, const SegmenterConfig& cfg) {
  cfg.validate();
  FlowTable table(cfg);
  std::vector<FeatureVector> out;
  while (auto p = reader.next()) append_features(table.ingest(*p), out);
  append_features(table.flush(), out);
  return out;
}

std::vector<FeatureVector> extract_features(const std::filesystem::path& pcap, const SegmenterConfig& cfg,
                                            IngestStats* stats) {
  PcapReader reader(pcap);
  auto out = extract_features(reader, cfg);
  if (stats) *stats = reader.stats();
  return out;
}

Matrix to_matrix(std::span<const FeatureVector> vectors) {
  Matrix m(0, kFeatureDims);
  m.reserve_rows(vectors.size());
  for (const auto& v : vectors) m.push_row(v.values);
  return m;
}

std::vector<FeatureMeta> metas(std::span<const FeatureVector> vectors) {
  std::vector<FeatureMeta> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) out.push_back(v.meta);
  return out;
}

}  // namespace flowguard
