#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"
#include "flowguard/pipeline.hpp"
#include "flowguard/synthgen.hpp"
#include "test_support.hpp"

using namespace flowguard;

namespace {

const Ipv4Address kMaster = fgtest::ip(10, 0, 0, 1);
const Ipv4Address kScanner = fgtest::ip(10, 0, 0, 99);
const Ipv4Address kAttacker = fgtest::ip(10, 0, 0, 66);

ScenarioConfig small(Scenario s, std::uint64_t seed = 7) {
  ScenarioConfig c;
  c.scenario = s;
  c.seed = seed;
  c.duration_s = 120;
  c.n_rtus = 3;
  c.scan_targets = 64;
  return c;
}

std::string pcap_bytes(const GeneratedCapture& cap) {
  std::ostringstream out;
  write_pcap(cap, out);
  return out.str();
}

std::vector<PacketRecord> records(const GeneratedCapture& cap) {
  std::vector<PacketRecord> out;
  for (const auto& p : cap.packets) out.push_back(p.record);
  return out;
}

bool touches(const PacketRecord& p, Ipv4Address a) { return p.src_ip == a || p.dst_ip == a; }

FeatureMeta meta_of(const PacketRecord& p) {
  FeatureMeta m;
  m.key = FlowKey::of(p);
  m.sender = {p.src_ip, p.src_port};
  m.segment_start_us = m.segment_end_us = p.ts_us;
  return m;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ParseError;
}

}  // namespace

TEST(Synthgen, BaselineCountsAndTtl) {
  ScenarioConfig c;
  c.scenario = Scenario::AN1;
  c.seed = 7;
  c.duration_s = 60;
  c.n_rtus = 2;
  c.poll_interval_s = 1.0;
  const auto cap = simulate(c);
  EXPECT_GE(cap.packets.size(), 240u);
  for (const auto& p : cap.packets) EXPECT_EQ(p.record.ttl, 64);
  EXPECT_TRUE(cap.labels.rules.empty());
  EXPECT_TRUE(cap.summary.anomaly_intervals.empty());
  EXPECT_EQ(cap.summary.packet_count, cap.packets.size());
  EXPECT_EQ(cap.summary.flow_count, 2u);
  for (const auto& p : cap.packets) EXPECT_LT(p.record.ts_us, 60'000'000);
}

TEST(Synthgen, CaptureOrderIsTimeOrder) {
  const auto cap = simulate(small(Scenario::AN7_1));
  for (std::size_t i = 1; i < cap.packets.size(); ++i) {
    EXPECT_LE(cap.packets[i - 1].record.ts_us, cap.packets[i].record.ts_us);
  }
}

TEST(Synthgen, ManipulationDropsTtlByOne) {
  for (Scenario s : {Scenario::AN2, Scenario::AN3}) {
    const auto cap = simulate(small(s));
    ASSERT_EQ(cap.summary.anomaly_intervals.size(), 1u);
    const auto iv = cap.summary.anomaly_intervals[0];
    ASSERT_EQ(cap.labels.rules.size(), 1u);
    const Ipv4Address target = *cap.labels.rules[0].dst_ip;
    std::size_t in_interval = 0;
    for (const auto& p : cap.packets) {
      const auto& r = p.record;
      if (!touches(r, target)) {
        EXPECT_EQ(r.ttl, 64);
        continue;
      }
      // Margin covers a poll exchange straddling either edge.
      if (r.ts_us >= iv.start_us + 50'000 && r.ts_us < iv.end_us) {
        EXPECT_EQ(r.ttl, 63);
        ++in_interval;
      } else if (r.ts_us < iv.start_us || r.ts_us >= iv.end_us + 50'000) {
        EXPECT_EQ(r.ttl, 64);
      }
    }
    EXPECT_GT(in_interval, 30u);
  }
}

TEST(Synthgen, SlowdownInflatesResponseTime) {
  const auto cap = simulate(small(Scenario::AN4));
  const auto iv = cap.summary.anomaly_intervals.at(0);
  const Ipv4Address target = *cap.labels.rules.at(0).dst_ip;
  double in_sum = 0, out_sum = 0;
  int in_n = 0, out_n = 0;
  std::int64_t last_poll = -1;
  for (const auto& p : cap.packets) {
    const auto& r = p.record;
    if (!touches(r, target) || r.payload_len == 0) continue;
    if (r.dst_ip == target) {
      last_poll = r.ts_us;
    } else if (last_poll >= 0) {
      const double lat = static_cast<double>(r.ts_us - last_poll);
      if (last_poll >= iv.start_us + 1'500'000 && last_poll < iv.end_us - 1'500'000) {
        in_sum += lat;
        ++in_n;
      } else if (last_poll < iv.start_us - 1'500'000 || last_poll > iv.end_us + 1'500'000) {
        out_sum += lat;
        ++out_n;
      }
    }
  }
  ASSERT_GT(in_n, 10);
  ASSERT_GT(out_n, 10);
  EXPECT_GT(in_sum / in_n, 4.0 * (out_sum / out_n));
}

TEST(Synthgen, ShutdownEndsWithResetThenSilence) {
  const auto cap = simulate(small(Scenario::AN5));
  ASSERT_EQ(cap.labels.rules.size(), 2u);
  EXPECT_EQ(cap.labels.rules[1].label, GroundTruth::Effect);
  const Ipv4Address target = *cap.labels.rules[0].dst_ip;
  const std::int64_t t = cap.labels.rules[0].start_us;
  std::vector<PacketRecord> after;
  for (const auto& p : cap.packets) {
    if (touches(p.record, target) && p.record.ts_us >= t) after.push_back(p.record);
  }
  ASSERT_EQ(after.size(), 1u);
  EXPECT_TRUE(after[0].has(tcp::kRst));
}

TEST(Synthgen, ExfiltrationIsLargeAndOnTelnet) {
  const auto cap = simulate(small(Scenario::AN6));
  std::size_t big = 0;
  for (const auto& p : cap.packets) {
    if (!touches(p.record, kAttacker)) continue;
    EXPECT_TRUE(p.record.src_port == 23 || p.record.dst_port == 23);
    if (p.record.payload_len == 1448) ++big;
  }
  EXPECT_GT(big, 1000u);
}

TEST(Synthgen, SynScanFlowsAreShortAndLabelled) {
  const auto cap = simulate(small(Scenario::AN7_4));
  const auto vecs = extract_features(records(cap), SegmenterConfig{});
  std::size_t scanner_flows = 0;
  for (const auto& v : vecs) {
    if (v.meta.sender.ip != kScanner) continue;
    ++scanner_flows;
    EXPECT_GE(v.meta.packet_count, 1u);
    EXPECT_LE(v.meta.packet_count, 2u);
    EXPECT_EQ(v.values[feat::kForward + feat::kSynPct], 1.0);
    EXPECT_EQ(label_of(v.meta, cap.labels).label, GroundTruth::AttackVector);
  }
  EXPECT_EQ(scanner_flows, 64u);
}

TEST(Synthgen, ScanFlagPatterns) {
  const std::map<Scenario, std::uint8_t> probe{{Scenario::AN7_5, 0},
                                               {Scenario::AN7_6, tcp::kFin},
                                               {Scenario::AN7_7, tcp::kFin | tcp::kPsh | tcp::kUrg},
                                               {Scenario::AN7_4, tcp::kSyn}};
  for (const auto& [s, flags] : probe) {
    const auto cap = simulate(small(s));
    std::size_t probes = 0;
    for (const auto& p : cap.packets) {
      if (p.record.src_ip != kScanner) continue;
      EXPECT_EQ(p.record.flags, flags) << to_string(s);
      ++probes;
    }
    EXPECT_EQ(probes, 64u) << to_string(s);
  }
}

TEST(Synthgen, ConnectScanCompletesHandshakes) {
  const auto cap = simulate(small(Scenario::AN7_3));
  std::set<std::uint16_t> acked;
  for (const auto& p : cap.packets) {
    if (p.record.src_ip == kScanner && p.record.flags == tcp::kAck) acked.insert(p.record.src_port);
  }
  // Every station's 2404 is among the targets and is open.
  EXPECT_GE(acked.size(), 3u);
}

TEST(Synthgen, Deterministic) {
  for (Scenario s : all_scenarios()) {
    const auto a = simulate(small(s, 11));
    const auto b = simulate(small(s, 11));
    EXPECT_EQ(pcap_bytes(a), pcap_bytes(b)) << to_string(s);
    std::ostringstream la, lb;
    write_labels_csv(la, a.labels);
    write_labels_csv(lb, b.labels);
    EXPECT_EQ(la.str(), lb.str());
  }
  EXPECT_NE(pcap_bytes(simulate(small(Scenario::AN1, 1))), pcap_bytes(simulate(small(Scenario::AN1, 2))));
}

TEST(Synthgen, GenerateWritesFilesThatReingestCleanly) {
  fgtest::TempDir dir;
  for (Scenario s : all_scenarios()) {
    const auto summary = generate(small(s), dir / "c.pcap", dir / "l.csv");
    PcapReader reader(dir / "c.pcap");
    std::uint64_t n = 0;
    while (reader.next()) ++n;
    EXPECT_EQ(reader.stats().skipped(), 0u) << to_string(s);
    EXPECT_FALSE(reader.stats().truncated_tail);
    EXPECT_EQ(n, summary.packet_count);
    const auto labels = read_labels_csv(dir / "l.csv");
    EXPECT_EQ(labels.rules, simulate(small(s)).labels.rules);
  }
}

TEST(Synthgen, DecodedRecordsMatchSimulation) {
  fgtest::TempDir dir;
  auto cfg = small(Scenario::AN6);
  cfg.tls = true;
  generate(cfg, dir / "c.pcap", dir / "l.csv");
  const auto cap = simulate(cfg);
  PcapReader reader(dir / "c.pcap");
  for (const auto& p : cap.packets) {
    const auto r = reader.next();
    ASSERT_TRUE(r);
    EXPECT_EQ(*r, p.record);
  }
  EXPECT_FALSE(reader.next());
}

TEST(Synthgen, TlsChangesOnlySizesAndPrologue) {
  for (Scenario s : all_scenarios()) {
    auto cfg = small(s);
    const auto plain = simulate(cfg);
    cfg.tls = true;
    const auto tls = simulate(cfg);
    ASSERT_EQ(tls.packets.size(), plain.packets.size() + 4 * cfg.n_rtus) << to_string(s);
    std::size_t j = 0;
    std::size_t inflated = 0;
    for (const auto& p : tls.packets) {
      const auto& r = p.record;
      const auto& q = plain.packets.at(j).record;
      if (r.ts_us != q.ts_us || FlowKey::of(r) != FlowKey::of(q) || r.flags != q.flags) continue;  // prologue
      EXPECT_EQ(r.src_ip, q.src_ip);
      EXPECT_EQ(r.ttl, q.ttl);
      EXPECT_EQ(r.window, q.window);
      if (r.payload_len != q.payload_len) {
        EXPECT_EQ(r.payload_len, q.payload_len + 29);
        ++inflated;
      }
      ++j;
    }
    EXPECT_EQ(j, plain.packets.size()) << to_string(s);
    EXPECT_GT(inflated, 0u);
    EXPECT_EQ(tls.summary.flow_count, plain.summary.flow_count);
  }
}

TEST(Synthgen, LabelsCoverInjectedFlows) {
  for (Scenario s : all_scenarios()) {
    if (s == Scenario::AN1) continue;
    const auto cap = simulate(small(s));
    std::set<FlowKey> anomalous;
    std::set<FlowKey> covered;
    std::optional<Ipv4Address> target;
    if (!is_scan(s) && s != Scenario::AN6) target = cap.labels.rules.at(0).dst_ip;
    for (const auto& p : cap.packets) {
      const auto& r = p.record;
      const auto k = FlowKey::of(r);
      const bool injected = touches(r, kScanner) || touches(r, kAttacker) || (target && touches(r, *target));
      if (!injected) continue;
      anomalous.insert(k);
      const auto l = label_of(meta_of(r), cap.labels);
      if (l.label != GroundTruth::Benign) covered.insert(k);
    }
    EXPECT_FALSE(anomalous.empty()) << to_string(s);
    EXPECT_EQ(covered, anomalous) << to_string(s);
  }
}

TEST(Synthgen, ScenarioNames) {
  EXPECT_EQ(all_scenarios().size(), 13u);
  for (Scenario s : all_scenarios()) EXPECT_EQ(parse_scenario(to_string(s)), s);
  EXPECT_EQ(to_string(Scenario::AN7_4), "AN7.4");
  EXPECT_TRUE(is_scan(Scenario::AN7_1));
  EXPECT_FALSE(is_scan(Scenario::AN6));
  EXPECT_EQ(code_of([] { parse_scenario("AN8"); }), ErrorCode::InvalidScenario);
}

TEST(Synthgen, InvalidConfigs) {
  auto c = small(Scenario::AN1);
  c.duration_s = 0;
  EXPECT_EQ(code_of([&] { simulate(c); }), ErrorCode::InvalidScenario);
  c = small(Scenario::AN1);
  c.n_rtus = 0;
  EXPECT_EQ(code_of([&] { simulate(c); }), ErrorCode::InvalidScenario);
  c = small(Scenario::AN1);
  c.jitter_frac = 1.0;
  EXPECT_EQ(code_of([&] { simulate(c); }), ErrorCode::InvalidScenario);
}

TEST(Synthgen, UnwritablePath) {
  fgtest::TempDir dir;
  EXPECT_EQ(code_of([&] { generate(small(Scenario::AN1), dir / "missing/x.pcap", dir / "l.csv"); }),
            ErrorCode::UnwritablePath);
  EXPECT_EQ(code_of([&] { generate(small(Scenario::AN1), dir / "x.pcap", dir / "missing/l.csv"); }),
            ErrorCode::UnwritablePath);
}

TEST(Synthgen, SummaryJson) {
  const auto cap = simulate(small(Scenario::AN5));
  const std::string j = cap.summary.to_json();
  EXPECT_NE(j.find("\"packet_count\""), std::string::npos);
  EXPECT_NE(j.find("\"flow_count\""), std::string::npos);
  EXPECT_NE(j.find("\"effect\""), std::string::npos);
}

TEST(RandomizePayloads, KeepsHeadersAndFeatures) {
  fgtest::TempDir dir;
  auto cfg = small(Scenario::AN6);
  cfg.tls = true;
  generate(cfg, dir / "a.pcap", dir / "l.csv");
  randomize_payloads(dir / "a.pcap", dir / "b.pcap", 99);
  const std::string a = fgtest::slurp(dir / "a.pcap");
  const std::string b = fgtest::slurp(dir / "b.pcap");
  ASSERT_EQ(a.size(), b.size());
  EXPECT_NE(a, b);
  std::ostringstream fa, fb;
  write_features_csv(fa, extract_features(dir / "a.pcap", SegmenterConfig{}));
  write_features_csv(fb, extract_features(dir / "b.pcap", SegmenterConfig{}));
  EXPECT_EQ(fa.str(), fb.str());
}
