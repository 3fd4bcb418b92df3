#include "flowguard/flow.hpp"

#include <algorithm>
#include <cmath>

#include "flowguard/error.hpp"

namespace flowguard {

namespace {

constexpr std::int64_t kSweepIntervalUs = 1'000'000;

bool terminates(const PacketRecord& p) noexcept { return p.has(tcp::kFin) || p.has(tcp::kRst); }

}  // namespace

FlowKey FlowKey::of(const PacketRecord& p) noexcept {
  const Endpoint a{p.src_ip, p.src_port};
  const Endpoint b{p.dst_ip, p.dst_port};
  return a <= b ? FlowKey{a, b, p.protocol} : FlowKey{b, a, p.protocol};
}

std::size_t FlowKeyHash::operator()(const FlowKey& k) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(k.lo.ip.value);
  mix(k.lo.port);
  mix(k.hi.ip.value);
  mix(k.hi.port);
  mix(k.protocol);
  return static_cast<std::size_t>(h);
}

Flow::Flow(const PacketRecord& first, std::uint64_t seq)
    : key(FlowKey::of(first)),
      sender{first.src_ip, first.src_port},
      first_ts(first.ts_us),
      last_ts(first.ts_us),
      sequence(seq) {
  packets.push_back({first, Direction::Forward});
}

Direction Flow::direction_of(const PacketRecord& p) const noexcept {
  return (p.src_ip == sender.ip && p.src_port == sender.port) ? Direction::Forward : Direction::Backward;
}

std::size_t Flow::add(const PacketRecord& p) {
  auto pos = std::upper_bound(packets.begin(), packets.end(), p.ts_us,
                              [](std::int64_t ts, const TaggedPacket& x) { return ts < x.packet.ts_us; });
  const auto idx = static_cast<std::size_t>(pos - packets.begin());
  packets.insert(pos, {p, direction_of(p)});
  first_ts = std::min(first_ts, p.ts_us);
  last_ts = std::max(last_ts, p.ts_us);
  return idx;
}

void SegmenterConfig::validate() const {
  if (!(timespan_s > 0.0) || !std::isfinite(timespan_s)) {
    throw Error(ErrorCode::InvalidArgument, "timespan must be a positive number of seconds");
  }
  if (!(idle_timeout_s >= timespan_s) || !std::isfinite(idle_timeout_s)) {
    throw Error(ErrorCode::InvalidArgument, "idle timeout must be >= timespan");
  }
  if (windowed_stride == 0) throw Error(ErrorCode::InvalidArgument, "windowed stride must be >= 1");
}

std::int64_t SegmenterConfig::timespan_us() const noexcept { return std::llround(timespan_s * 1e6); }
std::int64_t SegmenterConfig::idle_timeout_us() const noexcept { return std::llround(idle_timeout_s * 1e6); }

std::vector<TaggedPacket> window(std::span<const TaggedPacket> packets, std::size_t ref, double t_s) {
  const std::int64_t t_us = std::llround(t_s * 1e6);
  const std::int64_t p_ts = packets[ref].packet.ts_us;
  std::vector<TaggedPacket> out;
  for (const auto& x : packets) {
    const std::int64_t dt = p_ts - x.packet.ts_us;
    if (dt >= 0 && dt <= t_us) out.push_back(x);
  }
  return out;
}

FlowTable::FlowTable(SegmenterConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::size_t FlowTable::live_flows() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(table_.begin(), table_.end(), [](const auto& kv) { return kv.second.live.has_value(); }));
}

const FlowCollection* FlowTable::find(const FlowKey& key) const {
  auto it = table_.find(key);
  return it == table_.end() ? nullptr : &it->second;
}

void FlowTable::start_flow(FlowCollection& c, const PacketRecord& pkt) {
  c.live.emplace(pkt, next_sequence_++);
  c.packets_in_flow = 1;
  c.slot_start_us = pkt.ts_us;
}

void FlowTable::emit_slot(FlowCollection& c, std::vector<Segment>& out) {
  Flow& f = *c.live;
  if (f.packets.empty()) return;
  Segment s;
  s.key = f.key;
  s.sender = f.sender;
  s.start_us = f.packets.front().packet.ts_us;
  s.end_us = f.packets.back().packet.ts_us;
  s.packets = std::move(f.packets);
  f.packets.clear();
  out.push_back(std::move(s));
}

void FlowTable::emit_window(FlowCollection& c, std::size_t ref, std::vector<Segment>& out) {
  const Flow& f = *c.live;
  Segment s;
  s.key = f.key;
  s.sender = f.sender;
  s.packets = window(f.packets, ref, cfg_.timespan_s);
  s.start_us = s.packets.front().packet.ts_us;
  s.end_us = f.packets[ref].packet.ts_us;
  out.push_back(std::move(s));
}

void FlowTable::close_flow(FlowCollection& c, std::vector<Segment>& out) {
  if (!c.live) return;
  if (cfg_.mode == SegmentMode::Slotted) {
    emit_slot(c, out);
  } else if (c.packets_in_flow % cfg_.windowed_stride != 0 && !c.live->packets.empty()) {
    // The newest packet was never a reference point; give it one so the tail is not lost.
    emit_window(c, c.live->packets.size() - 1, out);
  }
  c.live.reset();
  ++c.terminated_flows;
  c.packets_in_flow = 0;
}

void FlowTable::append(FlowCollection& c, const PacketRecord& pkt, std::vector<Segment>& out) {
  Flow& f = *c.live;
  if (cfg_.mode == SegmentMode::Slotted) {
    if (pkt.ts_us - c.slot_start_us > cfg_.timespan_us()) {
      emit_slot(c, out);
      c.slot_start_us = pkt.ts_us;
    }
    f.add(pkt);
    ++c.packets_in_flow;
    return;
  }

  const std::size_t idx = f.add(pkt);
  ++c.packets_in_flow;
  if (c.packets_in_flow % cfg_.windowed_stride == 0) emit_window(c, idx, out);
  // Packets older than the newest timestamp minus the window can never be
  // inside a future window of an in-order capture.
  const std::int64_t horizon = f.last_ts - cfg_.timespan_us();
  auto keep = std::find_if(f.packets.begin(), f.packets.end(),
                           [horizon](const TaggedPacket& x) { return x.packet.ts_us >= horizon; });
  f.packets.erase(f.packets.begin(), keep);
}

void FlowTable::sweep_idle(std::int64_t now_us, std::vector<Segment>& out) {
  std::vector<FlowCollection*> idle;
  for (auto it = table_.begin(); it != table_.end();) {
    FlowCollection& c = it->second;
    if (!c.live) {
      it = table_.erase(it);
      continue;
    }
    if (now_us - c.live->last_ts > cfg_.idle_timeout_us()) idle.push_back(&c);
    ++it;
  }
  std::sort(idle.begin(), idle.end(), [](const FlowCollection* a, const FlowCollection* b) {
    return std::pair(a->live->first_ts, a->live->sequence) < std::pair(b->live->first_ts, b->live->sequence);
  });
  for (FlowCollection* c : idle) close_flow(*c, out);
}

std::vector<Segment> FlowTable::ingest(const PacketRecord& pkt) {
  std::vector<Segment> out;
  if (!next_sweep_us_ || pkt.ts_us >= *next_sweep_us_) {
    sweep_idle(pkt.ts_us, out);
    next_sweep_us_ = pkt.ts_us + kSweepIntervalUs;
  }

  const FlowKey key = FlowKey::of(pkt);
  auto [it, inserted] = table_.try_emplace(key);
  FlowCollection& c = it->second;
  if (inserted) c.key = key;

  if (c.live && pkt.ts_us - c.live->last_ts > cfg_.idle_timeout_us()) close_flow(c, out);

  if (!c.live) {
    // A new flow is opened by any packet, FIN/RST included; termination is
    // only checked for packets added to an existing flow.
    start_flow(c, pkt);
    if (cfg_.mode == SegmentMode::Windowed && cfg_.windowed_stride == 1) emit_window(c, 0, out);
    return out;
  }

  append(c, pkt, out);
  if (terminates(pkt)) {
    c.live->terminated = true;
    close_flow(c, out);
  }
  return out;
}

std::vector<Segment> FlowTable::flush() {
  std::vector<FlowCollection*> open;
  for (auto& [key, c] : table_) {
    if (c.live) open.push_back(&c);
  }
  std::sort(open.begin(), open.end(), [](const FlowCollection* a, const FlowCollection* b) {
    return std::pair(a->live->first_ts, a->live->sequence) < std::pair(b->live->first_ts, b->live->sequence);
  });
  std::vector<Segment> out;
  for (FlowCollection* c : open) close_flow(*c, out);
  table_.clear();
  next_sweep_us_.reset();
  return out;
}

}  // namespace flowguard
