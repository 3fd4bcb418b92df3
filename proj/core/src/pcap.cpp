#include "flowguard/pcap.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>

#include "flowguard/error.hpp"

namespace flowguard {

namespace {

constexpr std::uint32_t kMagicMicros = 0xA1B2C3D4;
constexpr std::uint32_t kMagicNanos = 0xA1B23C4D;
constexpr std::uint32_t kMagicPcapng = 0x0A0D0D0A;

constexpr std::uint16_t kEtherIpv4 = 0x0800;
constexpr std::uint16_t kEtherVlan = 0x8100;

constexpr std::size_t kEthernetHeader = 14;
constexpr std::size_t kVlanTag = 4;
constexpr std::size_t kSllHeader = 16;

std::uint16_t be16(const std::uint8_t* p) noexcept {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
std::uint32_t be32(const std::uint8_t* p) noexcept {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}
std::uint32_t le32(const std::uint8_t* p) noexcept {
  return (std::uint32_t{p[3]} << 24) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[1]} << 8) | p[0];
}
void put_be16(std::uint8_t* p, std::uint16_t v) noexcept {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v);
}
void put_be32(std::uint8_t* p, std::uint32_t v) noexcept {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (24 - 8 * i));
}
void put_le32(std::uint8_t* p, std::uint32_t v) noexcept {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put_le16(std::uint8_t* p, std::uint16_t v) noexcept {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

struct Layout {
  PacketRecord record;
  std::size_t payload_offset = 0;
};

// Offset of the IPv4 header inside the frame, or a skip reason.
std::variant<std::size_t, SkipReason> network_offset(std::span<const std::uint8_t> f, std::uint32_t link_type) {
  switch (link_type) {
    case kLinkEthernet: {
      if (f.size() < kEthernetHeader) return SkipReason::Truncated;
      std::size_t off = 12;
      std::uint16_t ethertype = be16(&f[off]);
      if (ethertype == kEtherVlan) {
        if (f.size() < kEthernetHeader + kVlanTag) return SkipReason::Truncated;
        off += kVlanTag;
        ethertype = be16(&f[off]);
      }
      if (ethertype != kEtherIpv4) return SkipReason::NonIpv4;
      return off + 2;
    }
    case kLinkLinuxSll: {
      if (f.size() < kSllHeader) return SkipReason::Truncated;
      if (be16(&f[14]) != kEtherIpv4) return SkipReason::NonIpv4;
      return kSllHeader;
    }
    case kLinkRaw:
    case kLinkIpv4:
      if (f.empty()) return SkipReason::Truncated;
      if ((f[0] >> 4) != 4) return SkipReason::NonIpv4;
      return std::size_t{0};
    default:
      return SkipReason::NonIpv4;
  }
}

std::variant<Layout, SkipReason> decode(std::span<const std::uint8_t> f, std::uint32_t link_type) {
  const auto net = network_offset(f, link_type);
  if (const auto* reason = std::get_if<SkipReason>(&net)) return *reason;
  const std::size_t ip = std::get<std::size_t>(net);

  if (f.size() < ip + 20) return SkipReason::Truncated;
  if ((f[ip] >> 4) != 4) return SkipReason::NonIpv4;
  const std::size_t ihl = std::size_t{f[ip] & 0x0Fu} * 4;
  if (ihl < 20) return SkipReason::Truncated;
  const std::size_t ip_total = be16(&f[ip + 2]);
  const std::uint16_t frag = be16(&f[ip + 6]);
  const std::uint8_t proto = f[ip + 9];
  if (proto != tcp::kProtocol) return SkipReason::NonTcp;
  // Non-first fragments carry no TCP header.
  if ((frag & 0x1FFF) != 0) return SkipReason::NonTcp;

  const std::size_t th = ip + ihl;
  if (f.size() < th + 20) return SkipReason::Truncated;
  const std::size_t doff = std::size_t{static_cast<std::uint8_t>(f[th + 12] >> 4)} * 4;
  if (doff < 20 || f.size() < th + doff) return SkipReason::Truncated;
  if (ip_total < ihl + doff) return SkipReason::Truncated;

  Layout out;
  PacketRecord& r = out.record;
  r.ttl = f[ip + 8];
  r.protocol = proto;
  r.src_ip = Ipv4Address{be32(&f[ip + 12])};
  r.dst_ip = Ipv4Address{be32(&f[ip + 16])};
  r.src_port = be16(&f[th]);
  r.dst_port = be16(&f[th + 2]);
  r.flags = static_cast<std::uint8_t>(f[th + 13] & 0x3F);
  r.window = be16(&f[th + 14]);
  r.payload_len = static_cast<std::uint32_t>(ip_total - ihl - doff);
  r.total_len = static_cast<std::uint32_t>(std::max(f.size(), ip + ip_total));
  out.payload_offset = th + doff;
  return out;
}

}  // namespace

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 4; ++i) {
    unsigned octet = 0;
    auto [next, ec] = std::from_chars(p, end, octet);
    if (ec != std::errc{} || next == p || octet > 255) return std::nullopt;
    value = (value << 8) | octet;
    p = next;
    if (i < 3) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
  }
  if (p != end) return std::nullopt;
  return Ipv4Address{value};
}

std::string Ipv4Address::to_string() const {
  return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xFF) + '.' +
         std::to_string((value >> 8) & 0xFF) + '.' + std::to_string(value & 0xFF);
}

DecodeResult decode_packet(std::span<const std::uint8_t> frame, std::uint32_t link_type) {
  auto res = decode(frame, link_type);
  if (const auto* reason = std::get_if<SkipReason>(&res)) return *reason;
  return std::get<Layout>(res).record;
}

std::optional<PayloadSpan> locate_payload(std::span<const std::uint8_t> frame, std::uint32_t link_type) {
  auto res = decode(frame, link_type);
  const auto* layout = std::get_if<Layout>(&res);
  if (!layout) return std::nullopt;
  const std::size_t available = frame.size() - layout->payload_offset;
  return PayloadSpan{layout->payload_offset, std::min<std::size_t>(available, layout->record.payload_len)};
}

PcapReader::PcapReader(const std::filesystem::path& path) {
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  in_ = std::move(file);
  read_global_header();
}

PcapReader::PcapReader(std::unique_ptr<std::istream> in) : in_(std::move(in)) { read_global_header(); }

void PcapReader::read_global_header() {
  std::array<std::uint8_t, 24> hdr{};
  in_->read(reinterpret_cast<char*>(hdr.data()), hdr.size());
  const auto got = static_cast<std::size_t>(in_->gcount());
  if (got >= 4 && le32(hdr.data()) == kMagicPcapng) {
    throw Error(ErrorCode::BadMagic, "pcapng files are not supported; convert to classic pcap first");
  }
  if (got < hdr.size()) throw Error(ErrorCode::TruncatedHeader, "pcap global header shorter than 24 bytes");

  const std::uint32_t magic_le = le32(hdr.data());
  const std::uint32_t magic_be = be32(hdr.data());
  if (magic_le == kMagicMicros || magic_le == kMagicNanos) {
    swapped_ = false;
    nanos_ = magic_le == kMagicNanos;
  } else if (magic_be == kMagicMicros || magic_be == kMagicNanos) {
    swapped_ = true;
    nanos_ = magic_be == kMagicNanos;
  } else {
    throw Error(ErrorCode::BadMagic, "unrecognized pcap magic");
  }
  link_type_ = swapped_ ? be32(&hdr[20]) : le32(&hdr[20]);
}

std::optional<PcapReader::RawRecord> PcapReader::next_raw() {
  if (stats_.truncated_tail) return std::nullopt;
  std::array<std::uint8_t, 16> hdr{};
  in_->read(reinterpret_cast<char*>(hdr.data()), hdr.size());
  const auto got = static_cast<std::size_t>(in_->gcount());
  if (got == 0) return std::nullopt;
  if (got < hdr.size()) {
    ++stats_.truncated;
    stats_.truncated_tail = true;
    return std::nullopt;
  }
  auto field = [&](std::size_t off) { return swapped_ ? be32(&hdr[off]) : le32(&hdr[off]); };
  const std::uint32_t ts_sec = field(0);
  const std::uint32_t ts_frac = field(4);
  const std::uint32_t incl_len = field(8);
  const std::uint32_t orig_len = field(12);

  RawRecord rec;
  rec.ts_us = std::int64_t{ts_sec} * 1'000'000 + (nanos_ ? ts_frac / 1000 : ts_frac);
  rec.orig_len = orig_len;
  rec.bytes.resize(incl_len);
  in_->read(reinterpret_cast<char*>(rec.bytes.data()), incl_len);
  if (static_cast<std::uint32_t>(in_->gcount()) != incl_len) {
    ++stats_.truncated;
    stats_.truncated_tail = true;
    return std::nullopt;
  }
  return rec;
}

std::optional<PacketRecord> PcapReader::next() {
  while (auto raw = next_raw()) {
    auto res = decode(raw->bytes, link_type_);
    if (auto* layout = std::get_if<Layout>(&res)) {
      PacketRecord r = layout->record;
      r.ts_us = raw->ts_us;
      r.total_len = std::max(raw->orig_len, r.payload_len);
      ++stats_.decoded;
      return r;
    }
    switch (std::get<SkipReason>(res)) {
      case SkipReason::NonIpv4: ++stats_.skipped_non_ipv4; break;
      case SkipReason::NonTcp: ++stats_.skipped_non_tcp; break;
      case SkipReason::Truncated: ++stats_.truncated; break;
    }
  }
  return std::nullopt;
}

Capture read_pcap(const std::filesystem::path& path) {
  PcapReader reader(path);
  Capture cap;
  while (auto r = reader.next()) cap.records.push_back(*r);
  cap.stats = reader.stats();
  return cap;
}

PcapWriter::PcapWriter(const std::filesystem::path& path, std::uint32_t link_type)
    : file_(path, std::ios::binary | std::ios::trunc), out_(&file_) {
  if (!file_) throw Error(ErrorCode::UnwritablePath, "cannot write " + path.string());
  write_global_header(link_type);
}

PcapWriter::PcapWriter(std::ostream& out, std::uint32_t link_type) : out_(&out) { write_global_header(link_type); }

void PcapWriter::write_global_header(std::uint32_t link_type) {
  std::array<std::uint8_t, 24> hdr{};
  put_le32(&hdr[0], kMagicMicros);
  put_le16(&hdr[4], 2);
  put_le16(&hdr[6], 4);
  put_le32(&hdr[16], 65535);
  put_le32(&hdr[20], link_type);
  out_->write(reinterpret_cast<const char*>(hdr.data()), hdr.size());
}

void PcapWriter::write(std::int64_t ts_us, std::span<const std::uint8_t> frame, std::uint32_t orig_len) {
  std::array<std::uint8_t, 16> hdr{};
  put_le32(&hdr[0], static_cast<std::uint32_t>(ts_us / 1'000'000));
  put_le32(&hdr[4], static_cast<std::uint32_t>(ts_us % 1'000'000));
  put_le32(&hdr[8], static_cast<std::uint32_t>(frame.size()));
  put_le32(&hdr[12], orig_len);
  out_->write(reinterpret_cast<const char*>(hdr.data()), hdr.size());
  out_->write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
  if (!*out_) throw Error(ErrorCode::IoError, "pcap write failed");
  ++count_;
}

std::vector<std::uint8_t> encode_frame(const PacketRecord& rec, std::span<const std::uint8_t> payload,
                                       const FrameExtras& extras) {
  std::vector<std::uint8_t> f(kEthernetHeader + 20 + 20 + payload.size(), 0);
  std::uint8_t* eth = f.data();
  // Locally administered MACs 02:00:<ip>.
  eth[0] = 0x02;
  put_be32(eth + 2, rec.dst_ip.value);
  eth[6] = 0x02;
  put_be32(eth + 8, rec.src_ip.value);
  put_be16(eth + 12, kEtherIpv4);

  std::uint8_t* ip = eth + kEthernetHeader;
  ip[0] = 0x45;
  put_be16(ip + 2, static_cast<std::uint16_t>(40 + payload.size()));
  put_be16(ip + 4, extras.ip_id);
  put_be16(ip + 6, 0x4000);  // DF
  ip[8] = rec.ttl;
  ip[9] = tcp::kProtocol;
  put_be32(ip + 12, rec.src_ip.value);
  put_be32(ip + 16, rec.dst_ip.value);
  std::uint32_t sum = 0;
  for (int i = 0; i < 20; i += 2) sum += be16(ip + i);
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  put_be16(ip + 10, static_cast<std::uint16_t>(~sum));

  std::uint8_t* th = ip + 20;
  put_be16(th, rec.src_port);
  put_be16(th + 2, rec.dst_port);
  put_be32(th + 4, extras.seq);
  put_be32(th + 8, extras.ack);
  th[12] = 5 << 4;
  th[13] = rec.flags & 0x3F;
  put_be16(th + 14, rec.window);
  if (!payload.empty()) std::memcpy(th + 20, payload.data(), payload.size());
  return f;
}

}  // namespace flowguard
