#include "flowguard/features.hpp"

#include <algorithm>
#include <limits>

#include "flowguard/error.hpp"

namespace flowguard {

namespace {

class Triple {
 public:
  void add(double v) noexcept {
    sum_ += v;
    max_ = std::max(max_, v);
    min_ = std::min(min_, v);
    ++n_;
  }
  // Writes mean, max, min. Mean is clamped because a floating sum of equal
  // values divided by n can land one ulp outside [min, max].
  void store(double* out) const noexcept {
    if (n_ == 0) {
      out[0] = out[1] = out[2] = 0.0;
      return;
    }
    out[0] = std::clamp(sum_ / static_cast<double>(n_), min_, max_);
    out[1] = max_;
    out[2] = min_;
  }

 private:
  double sum_ = 0.0;
  double max_ = -std::numeric_limits<double>::infinity();
  double min_ = std::numeric_limits<double>::infinity();
  std::size_t n_ = 0;
};

struct DirectionStats {
  Triple ipt, size, ttl, win;
  std::size_t packets = 0;
  std::size_t syn = 0, ack = 0, psh = 0, rst = 0, fin = 0;
  std::int64_t prev_ts = 0;

  void add(const PacketRecord& p) {
    if (packets > 0) ipt.add(static_cast<double>(p.ts_us - prev_ts) / 1e6);
    prev_ts = p.ts_us;
    size.add(static_cast<double>(p.total_len));
    ttl.add(static_cast<double>(p.ttl));
    win.add(static_cast<double>(p.window));
    syn += p.has(tcp::kSyn);
    ack += p.has(tcp::kAck);
    psh += p.has(tcp::kPsh);
    rst += p.has(tcp::kRst);
    fin += p.has(tcp::kFin);
    ++packets;
  }

  void store(double* out) const {
    if (packets == 0) {
      std::fill(out, out + kStatsPerDirection, 0.0);
      return;
    }
    ipt.store(out + feat::kIptMean);
    size.store(out + feat::kSizeMean);
    ttl.store(out + feat::kTtlMean);
    win.store(out + feat::kWinMean);
    const auto n = static_cast<double>(packets);
    out[feat::kSynPct] = static_cast<double>(syn) / n;
    out[feat::kAckPct] = static_cast<double>(ack) / n;
    out[feat::kPshPct] = static_cast<double>(psh) / n;
    out[feat::kRstPct] = static_cast<double>(rst) / n;
    out[feat::kFinPct] = static_cast<double>(fin) / n;
  }
};

std::array<std::string, kFeatureDims> build_names() {
  static constexpr const char* kStats[kStatsPerDirection] = {
      "ipt_mean", "ipt_max", "ipt_min", "size_mean", "size_max", "size_min", "ttl_mean", "ttl_max", "ttl_min",
      "win_mean", "win_max", "win_min", "syn_pct",   "ack_pct",  "psh_pct",  "rst_pct",  "fin_pct"};
  std::array<std::string, kFeatureDims> names;
  for (std::size_t i = 0; i < kStatsPerDirection; ++i) {
    names[i] = std::string("fwd_") + kStats[i];
    names[kStatsPerDirection + i] = std::string("bwd_") + kStats[i];
  }
  return names;
}

}  // namespace

const std::array<std::string, kFeatureDims>& feature_names() {
  static const auto names = build_names();
  return names;
}

FeatureVector compute_features(std::span<const TaggedPacket> segment) {
  if (segment.empty()) throw Error(ErrorCode::EmptySegment, "cannot compute features of an empty segment");
  DirectionStats fwd, bwd;
  for (const auto& tp : segment) {
    (tp.direction == Direction::Forward ? fwd : bwd).add(tp.packet);
  }
  FeatureVector fv;
  fwd.store(fv.values.data() + feat::kForward);
  bwd.store(fv.values.data() + feat::kBackward);

  const auto& first = segment.front().packet;
  fv.meta.key = FlowKey::of(first);
  fv.meta.sender = segment.front().direction == Direction::Forward ? Endpoint{first.src_ip, first.src_port}
                                                                    : Endpoint{first.dst_ip, first.dst_port};
  fv.meta.segment_start_us = segment.front().packet.ts_us;
  fv.meta.segment_end_us = segment.back().packet.ts_us;
  fv.meta.packet_count = segment.size();
  return fv;
}

FeatureVector compute_features(const Segment& segment) {
  FeatureVector fv = compute_features(std::span<const TaggedPacket>(segment.packets));
  fv.meta.key = segment.key;
  fv.meta.sender = segment.sender;
  fv.meta.segment_start_us = segment.start_us;
  fv.meta.segment_end_us = segment.end_us;
  return fv;
}

}  // namespace flowguard
