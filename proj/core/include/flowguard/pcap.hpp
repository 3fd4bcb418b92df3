#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace flowguard {

/// IPv4 address in host byte order.
struct Ipv4Address {
  std::uint32_t value = 0;

  static Ipv4Address from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) noexcept {
    return {(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d};
  }
  /// Parses dotted-quad notation; nullopt on malformed input.
  static std::optional<Ipv4Address> parse(std::string_view text);
  std::string to_string() const;

  friend auto operator<=>(const Ipv4Address&, const Ipv4Address&) = default;
};

/// TCP flag bits as they appear in the TCP header.
namespace tcp {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
inline constexpr std::uint8_t kUrg = 0x20;
inline constexpr std::uint8_t kProtocol = 6;
}  // namespace tcp

/// Header metadata of one captured TCP/IPv4 packet. No payload bytes are kept.
struct PacketRecord {
  std::int64_t ts_us = 0;
  Ipv4Address src_ip;
  Ipv4Address dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = tcp::kProtocol;
  std::uint8_t ttl = 0;
  std::uint8_t flags = 0;
  std::uint16_t window = 0;
  std::uint32_t total_len = 0;    // bytes on the wire, link header included
  std::uint32_t payload_len = 0;  // TCP payload bytes

  bool has(std::uint8_t flag) const noexcept { return (flags & flag) != 0; }

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

enum class SkipReason { NonIpv4, NonTcp, Truncated };

using DecodeResult = std::variant<PacketRecord, SkipReason>;

inline constexpr std::uint32_t kLinkEthernet = 1;
inline constexpr std::uint32_t kLinkRaw = 101;
inline constexpr std::uint32_t kLinkLinuxSll = 113;
inline constexpr std::uint32_t kLinkIpv4 = 228;

/// Decodes one frame. ts_us is left at 0 and total_len is the frame size;
/// the pcap reader overwrites both from the record header.
DecodeResult decode_packet(std::span<const std::uint8_t> frame, std::uint32_t link_type);

/// Location of the TCP payload within a decodable frame.
struct PayloadSpan {
  std::size_t offset = 0;
  std::size_t length = 0;  // clipped to the captured bytes
};
std::optional<PayloadSpan> locate_payload(std::span<const std::uint8_t> frame, std::uint32_t link_type);

struct IngestStats {
  std::uint64_t decoded = 0;
  std::uint64_t skipped_non_tcp = 0;
  std::uint64_t skipped_non_ipv4 = 0;
  std::uint64_t truncated = 0;
  bool truncated_tail = false;  // a record header overran the file; reading stopped there

  std::uint64_t skipped() const noexcept { return skipped_non_tcp + skipped_non_ipv4 + truncated; }
  friend bool operator==(const IngestStats&, const IngestStats&) = default;
};

/// Sequential classic-pcap reader. Accepts both byte orders and both
/// microsecond and nanosecond timestamp magics. pcapng is rejected.
class PcapReader {
 public:
  explicit PcapReader(const std::filesystem::path& path);
  explicit PcapReader(std::unique_ptr<std::istream> in);

  /// Next decoded TCP record, or nullopt at end of input.
  std::optional<PacketRecord> next();

  std::uint32_t link_type() const noexcept { return link_type_; }
  bool nanosecond() const noexcept { return nanos_; }
  const IngestStats& stats() const noexcept { return stats_; }

  /// Raw access used by tooling that rewrites captures: next record's
  /// header timestamp, original length and captured bytes.
  struct RawRecord {
    std::int64_t ts_us = 0;
    std::uint32_t orig_len = 0;
    std::vector<std::uint8_t> bytes;
  };
  std::optional<RawRecord> next_raw();

 private:
  void read_global_header();

  std::unique_ptr<std::istream> in_;
  bool swapped_ = false;
  bool nanos_ = false;
  std::uint32_t link_type_ = 0;
  IngestStats stats_;
};

struct Capture {
  std::vector<PacketRecord> records;
  IngestStats stats;
};

Capture read_pcap(const std::filesystem::path& path);

/// Writes little-endian microsecond-resolution classic pcap with Ethernet link type.
class PcapWriter {
 public:
  explicit PcapWriter(const std::filesystem::path& path, std::uint32_t link_type = kLinkEthernet);
  explicit PcapWriter(std::ostream& out, std::uint32_t link_type = kLinkEthernet);

  void write(std::int64_t ts_us, std::span<const std::uint8_t> frame, std::uint32_t orig_len);
  void write(std::int64_t ts_us, std::span<const std::uint8_t> frame) {
    write(ts_us, frame, static_cast<std::uint32_t>(frame.size()));
  }
  std::uint64_t count() const noexcept { return count_; }

 private:
  void write_global_header(std::uint32_t link_type);

  std::ofstream file_;
  std::ostream* out_;
  std::uint64_t count_ = 0;
};

/// Extra header fields that do not survive decoding but make frames look real.
struct FrameExtras {
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint16_t ip_id = 0;
};

/// Builds an Ethernet/IPv4/TCP frame (no IP or TCP options) carrying the given
/// payload. The record's total_len and payload_len are ignored; the frame is
/// 54 + payload.size() bytes. MAC addresses are derived from the IPs.
std::vector<std::uint8_t> encode_frame(const PacketRecord& rec, std::span<const std::uint8_t> payload,
                                       const FrameExtras& extras = {});

}  // namespace flowguard
