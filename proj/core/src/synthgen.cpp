#include "flowguard/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "flowguard/csv.hpp"
#include "flowguard/error.hpp"
#include "flowguard/flow.hpp"
#include "flowguard/rng.hpp"
#include "json.hpp"

namespace flowguard {

namespace {

constexpr std::uint16_t kIec104Port = 2404;
constexpr std::uint16_t kTelnetPort = 23;
constexpr std::uint32_t kTlsRecordOverhead = 29;
constexpr std::uint8_t kDefaultTtl = 64;
constexpr std::uint64_t kPayloadStreamSalt = 0x6A09E667F3BCC909ULL;

const Ipv4Address kMaster = Ipv4Address::from_octets(10, 0, 0, 1);
const Ipv4Address kAttacker = Ipv4Address::from_octets(10, 0, 0, 66);
const Ipv4Address kScanner = Ipv4Address::from_octets(10, 0, 0, 99);

Ipv4Address rtu_ip(std::size_t i) { return Ipv4Address::from_octets(10, 0, 1, static_cast<std::uint8_t>(10 + i)); }
Ipv4Address ghost_ip(std::size_t i) { return Ipv4Address::from_octets(10, 0, 1, static_cast<std::uint8_t>(220 + i)); }

constexpr std::array<std::uint16_t, 84> kScanPorts = {
    21,   22,   23,   25,   53,   80,   81,   88,   110,  111,  135,  139,  143,   179,   199,   389,   443,
    445,  465,  502,  513,  514,  515,  548,  554,  587,  631,  636,  646,  873,   990,   993,   995,   1025,
    1026, 1027, 1433, 1720, 1723, 1900, 2000, 2049, 2121, 2717, 3000, 3128, 3306,  3389,  3986,  4899,  5000,
    5009, 5051, 5060, 5101, 5190, 5357, 5432, 5631, 5666, 5800, 5900, 6000, 6001,  6646,  7070,  8000,  8008,
    8009, 8080, 8081, 8443, 8888, 9100, 9999, 10000, 20000, 32768, 44818, 47808, 49152, 102};

constexpr std::size_t kGhostHosts = 4;

struct Host {
  Ipv4Address ip;
  std::uint16_t port = 0;
  std::uint16_t window = 0;
};

struct Pending {
  std::int64_t ts = 0;
  std::uint64_t order = 0;
  PacketRecord rec;
};

class Simulator {
 public:
  explicit Simulator(const ScenarioConfig& cfg)
      : cfg_(cfg),
        timing_(cfg.seed),
        payload_rng_(cfg.seed ^ kPayloadStreamSalt),
        duration_us_(std::llround(cfg.duration_s * 1e6)),
        attack_start_(std::llround(cfg.duration_s * 0.4 * 1e6)),
        attack_end_(std::llround(cfg.duration_s * 0.7 * 1e6)) {}

  GeneratedCapture run() {
    for (std::size_t i = 0; i < cfg_.n_rtus; ++i) rtu_session(i);
    if (cfg_.scenario == Scenario::AN6) exfiltration();
    if (is_scan(cfg_.scenario)) scan();
    return finish();
  }

 private:
  std::int64_t below(std::uint64_t bound) { return static_cast<std::int64_t>(timing_.below(bound)); }

  void emit(std::int64_t ts, const Host& from, const Host& to, std::uint8_t flags, std::uint32_t payload_len,
            std::uint8_t ttl = kDefaultTtl) {
    Pending p;
    p.ts = ts;
    p.order = next_order_++;
    p.rec.ts_us = ts;
    p.rec.src_ip = from.ip;
    p.rec.dst_ip = to.ip;
    p.rec.src_port = from.port;
    p.rec.dst_port = to.port;
    p.rec.ttl = ttl;
    p.rec.flags = flags;
    p.rec.window = from.window;
    p.rec.payload_len = payload_len;
    p.rec.total_len = 54 + payload_len;
    pending_.push_back(p);
  }

  // Application payload as it appears on the wire; TLS adds record framing.
  std::uint32_t app(std::uint32_t len) const { return len > 0 && cfg_.tls ? len + kTlsRecordOverhead : len; }

  std::size_t target_rtu() const {
    return cfg_.scenario == Scenario::AN3 ? 1 % cfg_.n_rtus : 0;
  }

  void add_rule(std::optional<Ipv4Address> src, std::optional<Ipv4Address> dst, std::optional<std::uint16_t> dport,
                std::int64_t start, std::int64_t end, GroundTruth label) {
    const std::string id = to_string(cfg_.scenario);
    labels_.rules.push_back({src, dst, dport, start, end, label, id});
    intervals_.push_back({id, label, start, end});
  }

  void rtu_session(std::size_t i) {
    const Host m{kMaster, static_cast<std::uint16_t>(40000 + i), 64240};
    const Host r{rtu_ip(i), kIec104Port, 8192};
    const bool targeted = cfg_.scenario != Scenario::AN1 && i == target_rtu();
    const bool manipulated = targeted && (cfg_.scenario == Scenario::AN2 || cfg_.scenario == Scenario::AN3);
    const bool slowed = targeted && cfg_.scenario == Scenario::AN4;
    const bool shutdown = targeted && cfg_.scenario == Scenario::AN5;

    const std::int64_t t0 = 100'000 + static_cast<std::int64_t>(i) * 37'000 + below(50'000);
    const std::int64_t lat = 300 + below(200);
    emit(t0, m, r, tcp::kSyn, 0);
    emit(t0 + lat, r, m, tcp::kSyn | tcp::kAck, 0);
    emit(t0 + lat + 200, m, r, tcp::kAck, 0);
    if (cfg_.tls) {
      // ClientHello, ServerHello..ServerHelloDone, client Finished, server Finished.
      emit(t0 + 1000, m, r, tcp::kPsh | tcp::kAck, 517);
      emit(t0 + 2000, r, m, tcp::kPsh | tcp::kAck, 1180);
      emit(t0 + 3000, m, r, tcp::kPsh | tcp::kAck, 126);
      emit(t0 + 4000, r, m, tcp::kPsh | tcp::kAck, 51);
    }
    // STARTDT act / con.
    emit(t0 + 5000, m, r, tcp::kPsh | tcp::kAck, app(6));
    emit(t0 + 5000 + lat, r, m, tcp::kPsh | tcp::kAck, app(6));

    const auto poll_us = std::llround(cfg_.poll_interval_s * 1e6);
    const auto jitter_span = static_cast<double>(poll_us) * cfg_.jitter_frac;
    for (std::int64_t k = 1;; ++k) {
      const std::int64_t base = t0 + k * poll_us;
      const std::int64_t tp = base + std::llround((timing_.uniform() - 0.5) * jitter_span);
      if (tp >= duration_us_ - 10'000) break;
      std::int64_t resp_lat = 2000 + below(1000);
      const auto objects = static_cast<std::uint32_t>(1 + below(4));
      const std::int64_t ack_delay = 300 + below(200);

      if (shutdown && tp >= attack_start_) {
        emit(attack_start_, r, m, tcp::kRst | tcp::kAck, 0);
        add_rule(kMaster, r.ip, kIec104Port, attack_start_, attack_start_, GroundTruth::Attack);
        add_rule(kMaster, r.ip, kIec104Port, attack_start_, duration_us_, GroundTruth::Effect);
        break;
      }

      const bool in_attack = tp >= attack_start_ && tp < attack_end_;
      std::uint8_t ttl = kDefaultTtl;
      std::int64_t fwd_delay = 0, bwd_delay = 0;
      if (manipulated && in_attack) {
        // One extra hop through the attacker's host.
        ttl = kDefaultTtl - 1;
        fwd_delay = 1500 + below(3000);
        bwd_delay = 1500 + below(3000);
      }
      if (slowed && in_attack) resp_lat *= 5;

      const std::int64_t t_poll = tp + fwd_delay;
      const std::int64_t t_resp = t_poll + resp_lat + bwd_delay;
      emit(t_poll, m, r, tcp::kPsh | tcp::kAck, app(16), ttl);
      emit(t_resp, r, m, tcp::kPsh | tcp::kAck, app(14 + 12 * objects), ttl);
      emit(t_resp + ack_delay, m, r, tcp::kAck, 0, ttl);
    }

    if (targeted && (manipulated || slowed)) {
      add_rule(kMaster, r.ip, kIec104Port, attack_start_, attack_end_, GroundTruth::Attack);
    }
  }

  void exfiltration() {
    const Host a{kAttacker, 51515, 29200};
    const Host r{rtu_ip(0), kTelnetPort, 8192};
    std::int64_t t = attack_start_;
    const std::int64_t lat = 400 + below(200);
    emit(t, a, r, tcp::kSyn, 0);
    emit(t + lat, r, a, tcp::kSyn | tcp::kAck, 0);
    emit(t + 2 * lat, a, r, tcp::kAck, 0);
    // Banner, login and a command.
    constexpr std::array<std::uint32_t, 6> kLogin = {21, 8, 10, 12, 10, 40};
    for (std::size_t i = 0; i < kLogin.size(); ++i) {
      t += 500'000 + below(200'000);
      const bool from_rtu = i % 2 == 0;
      emit(t, from_rtu ? r : a, from_rtu ? a : r, tcp::kPsh | tcp::kAck, kLogin[i]);
      emit(t + lat, from_rtu ? a : r, from_rtu ? r : a, tcp::kAck, 0);
    }
    t += 1'000'000;
    std::uint64_t n = 0;
    while (t < attack_end_) {
      emit(t, r, a, tcp::kPsh | tcp::kAck, 1448);
      if (++n % 2 == 0) emit(t + lat, a, r, tcp::kAck, 0);
      t += 10'000 + below(10'000);
    }
    emit(t, r, a, tcp::kFin | tcp::kAck, 0);
    emit(t + lat, a, r, tcp::kFin | tcp::kAck, 0);
    emit(t + 2 * lat, r, a, tcp::kAck, 0);
    add_rule(kAttacker, std::nullopt, std::nullopt, attack_start_, t + 2 * lat, GroundTruth::Attack);
  }

  void scan() {
    const Scenario sc = cfg_.scenario;
    const bool connect = sc == Scenario::AN7_3;
    const bool probes_open = sc == Scenario::AN7_1 || sc == Scenario::AN7_3;
    std::uint8_t probe_flags = tcp::kSyn;
    if (sc == Scenario::AN7_5) probe_flags = 0;
    if (sc == Scenario::AN7_6) probe_flags = tcp::kFin;
    if (sc == Scenario::AN7_7) probe_flags = tcp::kFin | tcp::kPsh | tcp::kUrg;

    struct Target {
      Ipv4Address ip;
      std::uint16_t port;
      bool live;
      bool open;
    };
    std::vector<Target> forced, pool;
    std::vector<Target> hosts{{kMaster, 0, true, false}};
    for (std::size_t i = 0; i < cfg_.n_rtus; ++i) hosts.push_back({rtu_ip(i), 0, true, false});
    if (sc == Scenario::AN7_2) {
      for (std::size_t g = 0; g < kGhostHosts; ++g) hosts.push_back({ghost_ip(g), 0, false, false});
    }
    for (const auto& h : hosts) {
      for (std::uint16_t port : kScanPorts) pool.push_back({h.ip, port, h.live, false});
      const bool is_rtu = h.ip != kMaster && h.live;
      if (probes_open && is_rtu) forced.push_back({h.ip, kIec104Port, true, true});
    }
    auto shuffle = [this](std::vector<Target>& v) {
      for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    };
    shuffle(pool);
    std::vector<Target> targets = forced;
    for (const auto& t : pool) {
      if (targets.size() >= cfg_.scan_targets) break;
      targets.push_back(t);
    }
    targets.resize(std::min(targets.size(), cfg_.scan_targets));
    shuffle(targets);

    const auto raw_port = static_cast<std::uint16_t>(40000 + below(20000));
    std::int64_t t = attack_start_;
    for (std::size_t idx = 0; idx < targets.size(); ++idx) {
      const Target& tg = targets[idx];
      t += 4000 + below(2000);
      const Host s{kScanner, connect ? static_cast<std::uint16_t>(45000 + idx) : raw_port,
                   static_cast<std::uint16_t>(connect ? 64240 : 1024)};
      const Host h{tg.ip, tg.port, static_cast<std::uint16_t>(tg.open ? 8192 : 0)};
      emit(t, s, h, probe_flags, 0);
      if (!tg.live) continue;
      const std::int64_t rl = 250 + below(250);
      if (!tg.open) {
        emit(t + rl, h, s, tcp::kRst | tcp::kAck, 0);
        continue;
      }
      emit(t + rl, h, s, tcp::kSyn | tcp::kAck, 0);
      if (connect) {
        emit(t + rl + 100, s, h, tcp::kAck, 0);
        emit(t + rl + 200, s, h, tcp::kRst | tcp::kAck, 0);
      } else {
        emit(t + rl + 100, s, h, tcp::kRst, 0);
      }
    }
    add_rule(kScanner, std::nullopt, std::nullopt, attack_start_, t + 1'000'000, GroundTruth::AttackVector);
  }

  GeneratedCapture finish() {
    std::stable_sort(pending_.begin(), pending_.end(),
                     [](const Pending& a, const Pending& b) { return a.ts < b.ts; });
    GeneratedCapture cap;
    cap.packets.reserve(pending_.size());
    std::map<std::pair<Endpoint, Endpoint>, std::uint32_t> next_seq;
    std::map<Ipv4Address, std::uint16_t> ip_ids;
    std::set<FlowKey> keys;
    for (const Pending& p : pending_) {
      SyntheticPacket sp;
      sp.record = p.rec;
      const Endpoint src{p.rec.src_ip, p.rec.src_port};
      const Endpoint dst{p.rec.dst_ip, p.rec.dst_port};
      auto isn = [](const Endpoint& e) { return e.ip.value * 2654435761U + e.port * 40503U; };
      auto [it, fresh] = next_seq.try_emplace({src, dst}, isn(src));
      auto peer = next_seq.try_emplace({dst, src}, isn(dst)).first;
      sp.extras.seq = it->second;
      sp.extras.ack = p.rec.has(tcp::kAck) ? peer->second : 0;
      it->second += p.rec.payload_len + (p.rec.has(tcp::kSyn) ? 1 : 0) + (p.rec.has(tcp::kFin) ? 1 : 0);
      sp.extras.ip_id = ip_ids[p.rec.src_ip]++;
      sp.payload.resize(p.rec.payload_len);
      for (auto& b : sp.payload) b = static_cast<std::uint8_t>(payload_rng_.next() >> 56);
      keys.insert(FlowKey::of(p.rec));
      cap.packets.push_back(std::move(sp));
    }
    cap.labels = labels_;
    cap.summary.packet_count = cap.packets.size();
    cap.summary.flow_count = keys.size();
    cap.summary.anomaly_intervals = intervals_;
    return cap;
  }

  const ScenarioConfig& cfg_;
  SplitMix64 timing_;
  SplitMix64 payload_rng_;
  std::int64_t duration_us_;
  std::int64_t attack_start_;
  std::int64_t attack_end_;
  std::uint64_t next_order_ = 0;
  std::vector<Pending> pending_;
  LabelSpec labels_;
  std::vector<AnomalyInterval> intervals_;
};

}  // namespace

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::AN1: return "AN1";
    case Scenario::AN2: return "AN2";
    case Scenario::AN3: return "AN3";
    case Scenario::AN4: return "AN4";
    case Scenario::AN5: return "AN5";
    case Scenario::AN6: return "AN6";
    case Scenario::AN7_1: return "AN7.1";
    case Scenario::AN7_2: return "AN7.2";
    case Scenario::AN7_3: return "AN7.3";
    case Scenario::AN7_4: return "AN7.4";
    case Scenario::AN7_5: return "AN7.5";
    case Scenario::AN7_6: return "AN7.6";
    case Scenario::AN7_7: return "AN7.7";
  }
  return "AN1";
}

const std::vector<Scenario>& all_scenarios() {
  static const std::vector<Scenario> all = {Scenario::AN1,   Scenario::AN2,   Scenario::AN3,   Scenario::AN4,
                                            Scenario::AN5,   Scenario::AN6,   Scenario::AN7_1, Scenario::AN7_2,
                                            Scenario::AN7_3, Scenario::AN7_4, Scenario::AN7_5, Scenario::AN7_6,
                                            Scenario::AN7_7};
  return all;
}

Scenario parse_scenario(const std::string& s) {
  for (Scenario sc : all_scenarios()) {
    if (to_string(sc) == s) return sc;
  }
  throw Error(ErrorCode::InvalidScenario, "unknown scenario '" + s + "' (expected AN1..AN6, AN7.1..AN7.7)");
}

bool is_scan(Scenario s) noexcept { return s >= Scenario::AN7_1; }

void ScenarioConfig::validate() const {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw Error(ErrorCode::InvalidScenario, "duration must be > 0");
  if (n_rtus < 1 || n_rtus > 200) throw Error(ErrorCode::InvalidScenario, "n_rtus must be in [1, 200]");
  if (!(poll_interval_s > 0.0) || !std::isfinite(poll_interval_s)) {
    throw Error(ErrorCode::InvalidScenario, "poll interval must be > 0");
  }
  if (!(jitter_frac >= 0.0 && jitter_frac < 1.0)) throw Error(ErrorCode::InvalidScenario, "jitter_frac must be in [0, 1)");
}

std::string GenerationSummary::to_json() const {
  nlohmann::ordered_json j;
  j["packet_count"] = packet_count;
  j["flow_count"] = flow_count;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& iv : anomaly_intervals) {
    arr.push_back({{"scenario", iv.scenario}, {"label", to_string(iv.label)}, {"start_us", iv.start_us},
                   {"end_us", iv.end_us}});
  }
  j["anomaly_intervals"] = std::move(arr);
  return j.dump();
}

GeneratedCapture simulate(const ScenarioConfig& cfg) {
  cfg.validate();
  return Simulator(cfg).run();
}

void write_pcap(const GeneratedCapture& capture, std::ostream& out) {
  PcapWriter writer(out);
  for (const auto& p : capture.packets) writer.write(p.record.ts_us, encode_frame(p.record, p.payload, p.extras));
}

GenerationSummary generate(const ScenarioConfig& cfg, const std::filesystem::path& out_pcap,
                           const std::filesystem::path& out_labels) {
  const GeneratedCapture cap = simulate(cfg);
  {
    std::ofstream out(out_pcap, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::UnwritablePath, "cannot write " + out_pcap.string());
    write_pcap(cap, out);
    if (!out) throw Error(ErrorCode::UnwritablePath, "write failed for " + out_pcap.string());
  }
  std::ofstream labels(out_labels, std::ios::binary | std::ios::trunc);
  if (!labels) throw Error(ErrorCode::UnwritablePath, "cannot write " + out_labels.string());
  write_labels_csv(labels, cap.labels);
  return cap.summary;
}

void randomize_payloads(const std::filesystem::path& in, const std::filesystem::path& out, std::uint64_t seed) {
  PcapReader reader(in);
  PcapWriter writer(out, reader.link_type());
  SplitMix64 rng(seed);
  while (auto raw = reader.next_raw()) {
    if (auto span = locate_payload(raw->bytes, reader.link_type())) {
      for (std::size_t i = 0; i < span->length; ++i) {
        raw->bytes[span->offset + i] = static_cast<std::uint8_t>(rng.next() >> 56);
      }
    }
    writer.write(raw->ts_us, raw->bytes, raw->orig_len);
  }
}

}  // namespace flowguard
