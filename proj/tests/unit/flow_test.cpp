#include <gtest/gtest.h>

#include <map>
#include <set>

#include "flowguard/error.hpp"
#include "flowguard/flow.hpp"
#include "test_support.hpp"

using namespace flowguard;

namespace {

const Ipv4Address A = fgtest::ip(10, 0, 0, 1);
const Ipv4Address B = fgtest::ip(10, 0, 0, 2);
const Ipv4Address C = fgtest::ip(10, 0, 0, 3);

constexpr std::int64_t kSec = 1'000'000;

SegmenterConfig slotted(double t) {
  SegmenterConfig cfg;
  cfg.timespan_s = t;
  cfg.idle_timeout_s = std::max(120.0, t);
  return cfg;
}

std::vector<Segment> run_all(FlowTable& table, const std::vector<PacketRecord>& pkts) {
  std::vector<Segment> out;
  for (const auto& p : pkts) {
    auto s = table.ingest(p);
    out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  auto rest = table.flush();
  out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  return out;
}

}  // namespace

TEST(FlowKey, Symmetric) {
  const auto ab = fgtest::packet(0, A, 1000, B, 2404, tcp::kSyn);
  const auto ba = fgtest::packet(0, B, 2404, A, 1000, tcp::kAck);
  EXPECT_EQ(FlowKey::of(ab), FlowKey::of(ba));
  EXPECT_NE(FlowKey::of(ab), FlowKey::of(fgtest::packet(0, A, 1001, B, 2404, 0)));
}

TEST(FlowTable, SynOpensFlowWithInitiatorAsSender) {
  FlowTable table(slotted(60));
  const auto syn = fgtest::packet(0, A, 1000, B, 2404, tcp::kSyn);
  EXPECT_TRUE(table.ingest(syn).empty());
  EXPECT_EQ(table.live_flows(), 1u);
  const auto* c = table.find(FlowKey::of(syn));
  ASSERT_NE(c, nullptr);
  ASSERT_TRUE(c->live);
  EXPECT_EQ(c->live->sender, (Endpoint{A, 1000}));
  EXPECT_EQ(c->live->packets.size(), 1u);
}

TEST(FlowTable, FinClosesSlotAndNextPacketStartsNewFlow) {
  FlowTable table(slotted(60));
  table.ingest(fgtest::packet(0, A, 1000, B, 2404, tcp::kSyn));
  table.ingest(fgtest::packet(1000, B, 2404, A, 1000, tcp::kSyn | tcp::kAck));
  const auto out = table.ingest(fgtest::packet(2000, A, 1000, B, 2404, tcp::kFin | tcp::kAck));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].packets.size(), 3u);
  EXPECT_EQ(out[0].sender, (Endpoint{A, 1000}));
  const auto key = FlowKey::of(fgtest::packet(0, A, 1000, B, 2404, 0));
  EXPECT_FALSE(table.find(key)->live);
  EXPECT_EQ(table.find(key)->terminated_flows, 1u);

  EXPECT_TRUE(table.ingest(fgtest::packet(3000, B, 2404, A, 1000, tcp::kAck)).empty());
  ASSERT_TRUE(table.find(key)->live);
  EXPECT_EQ(table.find(key)->live->sender, (Endpoint{B, 2404}));
}

TEST(FlowTable, RstTerminatesToo) {
  FlowTable table(slotted(60));
  table.ingest(fgtest::packet(0, A, 1000, B, 2404, tcp::kAck));
  EXPECT_EQ(table.ingest(fgtest::packet(10, B, 2404, A, 1000, tcp::kRst)).size(), 1u);
}

TEST(FlowTable, SlotClosesWhenTimespanExceeded) {
  FlowTable table(slotted(10));
  EXPECT_TRUE(table.ingest(fgtest::packet(0, A, 1000, B, 2404, tcp::kAck)).empty());
  const auto out = table.ingest(fgtest::packet(11 * kSec, A, 1000, B, 2404, tcp::kAck));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].packets.size(), 1u);
  EXPECT_EQ(out[0].start_us, 0);
  const auto rest = table.flush();
  ASSERT_EQ(rest.size(), 1u);
  EXPECT_EQ(rest[0].start_us, 11 * kSec);
}

TEST(FlowTable, SlotBoundaryIsStrict) {
  FlowTable table(slotted(10));
  table.ingest(fgtest::packet(0, A, 1000, B, 2404, tcp::kAck));
  EXPECT_TRUE(table.ingest(fgtest::packet(10 * kSec, A, 1000, B, 2404, tcp::kAck)).empty());
  EXPECT_EQ(table.ingest(fgtest::packet(10 * kSec + 1, A, 1000, B, 2404, tcp::kAck)).size(), 1u);
}

TEST(FlowTable, IdleFlowsClosedLazily) {
  SegmenterConfig cfg = slotted(10);
  cfg.idle_timeout_s = 30;
  FlowTable table(cfg);
  table.ingest(fgtest::packet(0, A, 1000, B, 2404, tcp::kAck));
  const auto out = table.ingest(fgtest::packet(31 * kSec, C, 5, B, 2404, tcp::kAck));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].sender.ip, A);
  EXPECT_EQ(table.live_flows(), 1u);
}

TEST(FlowTable, FlushEmptyAndOrdered) {
  FlowTable table(slotted(60));
  EXPECT_TRUE(table.flush().empty());
  table.ingest(fgtest::packet(5, C, 7, B, 2404, tcp::kAck));
  table.ingest(fgtest::packet(9, A, 7, B, 2404, tcp::kAck));
  table.ingest(fgtest::packet(10, A, 7, B, 2404, tcp::kAck));
  table.ingest(fgtest::packet(11, A, 7, B, 2404, tcp::kAck));
  const auto out = table.flush();
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].sender.ip, C);
  EXPECT_EQ(out[1].packets.size(), 3u);
  EXPECT_EQ(table.live_flows(), 0u);
}

TEST(FlowTable, OnePacketFlowFlushed) {
  FlowTable table(slotted(60));
  table.ingest(fgtest::packet(0, A, 1, B, 2, tcp::kSyn));
  table.ingest(fgtest::packet(1, A, 1, B, 2, tcp::kAck));
  table.ingest(fgtest::packet(2, A, 1, B, 2, tcp::kAck));
  EXPECT_EQ(table.flush().size(), 1u);
}

TEST(FlowTable, InvalidConfigRejected) {
  SegmenterConfig cfg;
  cfg.timespan_s = 0;
  EXPECT_THROW(FlowTable{cfg}, Error);
  cfg.timespan_s = 200;
  cfg.idle_timeout_s = 120;
  EXPECT_THROW(FlowTable{cfg}, Error);
  cfg = SegmenterConfig{};
  cfg.windowed_stride = 0;
  EXPECT_THROW(FlowTable{cfg}, Error);
}

TEST(Window, DirectApplication) {
  std::vector<TaggedPacket> f;
  for (std::int64_t s : {0, 5, 12}) f.push_back({fgtest::packet(s * kSec, A, 1, B, 2, 0), Direction::Forward});
  auto w = window(f, 2, 10.0);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].packet.ts_us, 5 * kSec);
  EXPECT_EQ(w[1].packet.ts_us, 12 * kSec);
  EXPECT_EQ(window(f, 0, 10.0).size(), 1u);
}

TEST(Window, ZeroSpanKeepsSameTimestamp) {
  std::vector<TaggedPacket> f;
  for (std::int64_t t : {1, 3, 3, 3, 4}) f.push_back({fgtest::packet(t, A, 1, B, 2, 0), Direction::Forward});
  EXPECT_EQ(window(f, 2, 0.0).size(), 3u);
}

// Every packet lands in exactly one slot; ordering inside each slot is by time.
TEST(FlowTable, SlottedPartitionProperty) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    fgtest::SplitMix64 rng(seed);
    std::vector<PacketRecord> pkts;
    std::int64_t t = 0;
    for (int i = 0; i < 2000; ++i) {
      t += static_cast<std::int64_t>(rng.below(300'000));
      const auto host = static_cast<std::uint8_t>(1 + rng.below(6));
      const bool fwd = rng.below(2) == 0;
      std::uint8_t flags = tcp::kAck;
      if (rng.below(50) == 0) flags |= tcp::kFin;
      if (rng.below(80) == 0) flags |= tcp::kRst;
      const auto h = fgtest::ip(10, 0, 0, host);
      const auto srv = fgtest::ip(10, 0, 1, 1);
      pkts.push_back(fwd ? fgtest::packet(t, h, 4000, srv, 2404, flags) : fgtest::packet(t, srv, 2404, h, 4000, flags));
    }
    SegmenterConfig cfg = slotted(10);
    cfg.idle_timeout_s = 20;
    FlowTable table(cfg);
    const auto segs = run_all(table, pkts);
    std::size_t total = 0;
    std::multiset<std::int64_t> seen;
    for (const auto& s : segs) {
      total += s.packets.size();
      EXPECT_FALSE(s.packets.empty());
      EXPECT_LE(s.end_us - s.start_us, 10 * kSec);
      for (std::size_t i = 0; i < s.packets.size(); ++i) {
        seen.insert(s.packets[i].packet.ts_us);
        EXPECT_EQ(FlowKey::of(s.packets[i].packet), s.key);
        if (i) {
          EXPECT_LE(s.packets[i - 1].packet.ts_us, s.packets[i].packet.ts_us);
        }
      }
    }
    EXPECT_EQ(total, pkts.size());
    std::multiset<std::int64_t> expected;
    for (const auto& p : pkts) expected.insert(p.ts_us);
    EXPECT_EQ(seen, expected);
  }
}

// Windowed mode with stride 1 on a single long flow evaluates the trailing window at every packet.
TEST(FlowTable, WindowedMatchesDirectWindowPerPacket) {
  fgtest::SplitMix64 rng(9);
  std::vector<PacketRecord> pkts;
  std::vector<TaggedPacket> tagged;
  std::int64_t t = 0;
  for (int i = 0; i < 300; ++i) {
    t += static_cast<std::int64_t>(rng.below(2 * kSec));
    const bool fwd = rng.below(2) == 0;
    auto p = fwd ? fgtest::packet(t, A, 1, B, 2, tcp::kAck) : fgtest::packet(t, B, 2, A, 1, tcp::kAck);
    pkts.push_back(p);
    tagged.push_back({p, fwd ? Direction::Forward : Direction::Backward});
  }
  SegmenterConfig cfg;
  cfg.mode = SegmentMode::Windowed;
  cfg.timespan_s = 10;
  cfg.idle_timeout_s = 1000;
  FlowTable table(cfg);
  const auto segs = run_all(table, pkts);
  ASSERT_EQ(segs.size(), pkts.size());
  for (std::size_t i = 0; i < pkts.size(); ++i) {
    EXPECT_EQ(segs[i].packets, window(tagged, i, 10.0)) << i;
    EXPECT_EQ(segs[i].end_us, pkts[i].ts_us);
  }
}

TEST(FlowTable, WindowedStrideEmitsEveryNthPacketAndTail) {
  SegmenterConfig cfg;
  cfg.mode = SegmentMode::Windowed;
  cfg.timespan_s = 10;
  cfg.windowed_stride = 4;
  FlowTable table(cfg);
  std::vector<PacketRecord> pkts;
  for (int i = 0; i < 10; ++i) pkts.push_back(fgtest::packet(i * kSec, A, 1, B, 2, tcp::kAck));
  const auto segs = run_all(table, pkts);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(segs[0].end_us, 3 * kSec);
  EXPECT_EQ(segs[1].end_us, 7 * kSec);
  EXPECT_EQ(segs[2].end_us, 9 * kSec);
}
