#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "flowguard/pcap.hpp"

namespace flowguard {

struct Endpoint {
  Ipv4Address ip;
  std::uint16_t port = 0;

  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

/// Canonical, direction-free flow identity: the endpoint pair is stored in
/// sorted order so key(a->b) == key(b->a).
struct FlowKey {
  Endpoint lo;
  Endpoint hi;
  std::uint8_t protocol = tcp::kProtocol;

  static FlowKey of(const PacketRecord& p) noexcept;

  friend auto operator<=>(const FlowKey&, const FlowKey&) = default;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const noexcept;
};

enum class Direction : std::uint8_t { Forward, Backward };

struct TaggedPacket {
  PacketRecord packet;
  Direction direction = Direction::Forward;

  friend bool operator==(const TaggedPacket&, const TaggedPacket&) = default;
};

/// Packets of one session between a sender and a receiver.
struct Flow {
  FlowKey key;
  Endpoint sender;  // forward direction anchor
  std::vector<TaggedPacket> packets;  // ordered by ts_us, ties in arrival order
  bool terminated = false;
  std::int64_t first_ts = 0;
  std::int64_t last_ts = 0;
  std::uint64_t sequence = 0;  // creation order inside the owning table

  Flow(const PacketRecord& first, std::uint64_t seq);

  /// Inserts keeping timestamp order; returns the insert position.
  std::size_t add(const PacketRecord& p);
  Direction direction_of(const PacketRecord& p) const noexcept;
};

/// All sessions seen for one key. Only the most recent flow is retained in
/// memory; earlier (terminated) flows have already been emitted.
struct FlowCollection {
  FlowKey key;
  std::optional<Flow> live;
  std::uint64_t terminated_flows = 0;
  std::uint64_t packets_in_flow = 0;  // packets added to the live flow so far
  std::int64_t slot_start_us = 0;     // slotted mode: first packet of the open slot
};

enum class SegmentMode { Slotted, Windowed };

struct SegmenterConfig {
  SegmentMode mode = SegmentMode::Slotted;
  double timespan_s = 60.0;
  double idle_timeout_s = 120.0;
  std::size_t windowed_stride = 1;

  /// Throws Error(InvalidArgument) when an invariant is violated.
  void validate() const;
  std::int64_t timespan_us() const noexcept;
  std::int64_t idle_timeout_us() const noexcept;
};

/// A completed slot (slotted mode) or one window evaluation (windowed mode).
struct Segment {
  FlowKey key;
  Endpoint sender;
  std::vector<TaggedPacket> packets;
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
};

/// Packets x of a flow with 0 <= p.ts - x.ts <= t, where p = packets[ref].
std::vector<TaggedPacket> window(std::span<const TaggedPacket> packets, std::size_t ref, double t_s);

/// Flow table implementing packet flow management with slotted or windowed
/// segmentation. Single writer; feed packets in capture order.
class FlowTable {
 public:
  explicit FlowTable(SegmenterConfig cfg);

  std::vector<Segment> ingest(const PacketRecord& pkt);
  std::vector<Segment> flush();

  std::size_t live_flows() const noexcept;
  const FlowCollection* find(const FlowKey& key) const;
  const SegmenterConfig& config() const noexcept { return cfg_; }

 private:
  struct Closing {
    std::int64_t first_ts;
    std::uint64_t sequence;
    std::vector<Segment> segments;
  };

  void start_flow(FlowCollection& c, const PacketRecord& pkt);
  void close_flow(FlowCollection& c, std::vector<Segment>& out);
  void append(FlowCollection& c, const PacketRecord& pkt, std::vector<Segment>& out);
  void emit_slot(FlowCollection& c, std::vector<Segment>& out);
  void emit_window(FlowCollection& c, std::size_t ref, std::vector<Segment>& out);
  void sweep_idle(std::int64_t now_us, std::vector<Segment>& out);

  SegmenterConfig cfg_;
  std::unordered_map<FlowKey, FlowCollection, FlowKeyHash> table_;
  std::uint64_t next_sequence_ = 0;
  std::optional<std::int64_t> next_sweep_us_;
};

}  // namespace flowguard
