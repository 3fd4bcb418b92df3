#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "flowguard/evaluation.hpp"
#include "flowguard/pcap.hpp"

namespace flowguard {

enum class Scenario { AN1, AN2, AN3, AN4, AN5, AN6, AN7_1, AN7_2, AN7_3, AN7_4, AN7_5, AN7_6, AN7_7 };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& s);  // throws Error(InvalidScenario)
const std::vector<Scenario>& all_scenarios();
bool is_scan(Scenario s) noexcept;

struct ScenarioConfig {
  Scenario scenario = Scenario::AN1;
  std::uint64_t seed = 1;
  double duration_s = 600.0;
  std::size_t n_rtus = 4;
  double poll_interval_s = 1.0;
  bool tls = false;
  double jitter_frac = 0.1;
  std::size_t scan_targets = 256;

  void validate() const;  // throws Error(InvalidScenario)
};

struct AnomalyInterval {
  std::string scenario;
  GroundTruth label = GroundTruth::Attack;
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
};

struct GenerationSummary {
  std::uint64_t packet_count = 0;
  std::uint64_t flow_count = 0;  // distinct canonical flow keys
  std::vector<AnomalyInterval> anomaly_intervals;

  std::string to_json() const;
};

struct SyntheticPacket {
  PacketRecord record;  // total_len and payload_len filled in
  std::vector<std::uint8_t> payload;
  FrameExtras extras;
};

struct GeneratedCapture {
  std::vector<SyntheticPacket> packets;  // in capture order
  LabelSpec labels;
  GenerationSummary summary;
};

/// Event simulation of a master polling n_rtus IEC 104 stations on port
/// 2404, with the scenario's anomaly overlaid. Identical configs give
/// identical output on every platform.
///
/// Timing and sizes are drawn from one SplitMix64 stream seeded with `seed`;
/// opaque payload bytes come from a second stream, so TLS framing changes
/// lengths without moving any timestamp.
GeneratedCapture simulate(const ScenarioConfig& cfg);

void write_pcap(const GeneratedCapture& capture, std::ostream& out);

/// simulate + write pcap and label CSV. Throws Error(UnwritablePath).
GenerationSummary generate(const ScenarioConfig& cfg, const std::filesystem::path& out_pcap,
                           const std::filesystem::path& out_labels);

/// Copies a capture, replacing every TCP payload byte with seeded random
/// bytes. Headers, timestamps and lengths are untouched.
void randomize_payloads(const std::filesystem::path& in, const std::filesystem::path& out, std::uint64_t seed);

}  // namespace flowguard
