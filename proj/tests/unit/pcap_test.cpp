#include <gtest/gtest.h>

#include <sstream>

#include "flowguard/error.hpp"
#include "flowguard/pcap.hpp"
#include "test_support.hpp"

using namespace flowguard;
using fgtest::FrameSpec;
using fgtest::RecordSpec;

namespace {

Capture read_bytes(const std::string& image) {
  fgtest::TempDir dir;
  fgtest::spit(dir / "c.pcap", image);
  return read_pcap(dir / "c.pcap");
}

ErrorCode error_of(const std::string& image) {
  try {
    read_bytes(image);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Pcap, SingleSynRecord) {
  const auto cap = read_bytes(fgtest::pcap_file({{1, 250, fgtest::frame({})}}));
  ASSERT_EQ(cap.records.size(), 1u);
  const auto& r = cap.records[0];
  EXPECT_EQ(r.flags, tcp::kSyn);
  EXPECT_EQ(r.ts_us, 1'000'250);
  EXPECT_EQ(r.src_ip, fgtest::ip(10, 0, 0, 1));
  EXPECT_EQ(r.dst_ip, fgtest::ip(10, 0, 0, 2));
  EXPECT_EQ(r.src_port, 1000);
  EXPECT_EQ(r.dst_port, 2404);
  EXPECT_EQ(r.ttl, 64);
  EXPECT_EQ(r.window, 512);
  EXPECT_EQ(r.total_len, 54u);
  EXPECT_EQ(r.payload_len, 0u);
  EXPECT_EQ(r.protocol, 6);
  EXPECT_EQ(cap.stats.decoded, 1u);
  EXPECT_EQ(cap.stats.skipped(), 0u);
}

TEST(Pcap, ByteSwappedMagicGivesIdenticalRecord) {
  const std::vector<RecordSpec> recs{{7, 99, fgtest::frame({})}};
  const auto le = read_bytes(fgtest::pcap_file(recs, false));
  const auto be = read_bytes(fgtest::pcap_file(recs, true));
  ASSERT_EQ(be.records.size(), 1u);
  EXPECT_EQ(le.records, be.records);
}

TEST(Pcap, NanosecondMagicTruncatesToMicroseconds) {
  const auto cap = read_bytes(fgtest::pcap_file({{2, 123'456'789, fgtest::frame({})}}, false, 0xA1B23C4D));
  ASSERT_EQ(cap.records.size(), 1u);
  EXPECT_EQ(cap.records[0].ts_us, 2'123'456);
}

TEST(Pcap, UdpIsSkipped) {
  FrameSpec udp;
  udp.protocol = 17;
  const auto cap = read_bytes(fgtest::pcap_file({{0, 0, fgtest::frame(udp)}}));
  EXPECT_TRUE(cap.records.empty());
  EXPECT_EQ(cap.stats.skipped_non_tcp, 1u);
}

TEST(Pcap, ArpIsSkippedAsNonIpv4) {
  FrameSpec arp;
  arp.ethertype = 0x0806;
  const auto bytes = fgtest::as_bytes(fgtest::frame(arp));
  const auto res = decode_packet(bytes, kLinkEthernet);
  ASSERT_TRUE(std::holds_alternative<SkipReason>(res));
  EXPECT_EQ(std::get<SkipReason>(res), SkipReason::NonIpv4);
}

TEST(Pcap, PayloadLengthFromHeaderArithmetic) {
  FrameSpec s;
  s.payload = std::string(10, 'x');
  const auto res = decode_packet(fgtest::as_bytes(fgtest::frame(s)), kLinkEthernet);
  ASSERT_TRUE(std::holds_alternative<PacketRecord>(res));
  EXPECT_EQ(std::get<PacketRecord>(res).payload_len, 10u);
}

TEST(Pcap, IpOptionsShiftPayload) {
  FrameSpec s;
  s.payload = "0123456789";
  FrameSpec opt = s;
  opt.ihl_words = 6;
  const auto plain = fgtest::as_bytes(fgtest::frame(s));
  const auto with_opt = fgtest::as_bytes(fgtest::frame(opt));
  const auto a = std::get<PacketRecord>(decode_packet(plain, kLinkEthernet));
  const auto b = std::get<PacketRecord>(decode_packet(with_opt, kLinkEthernet));
  EXPECT_EQ(a.payload_len, b.payload_len);
  const auto pa = locate_payload(plain, kLinkEthernet);
  const auto pb = locate_payload(with_opt, kLinkEthernet);
  ASSERT_TRUE(pa && pb);
  EXPECT_EQ(pb->offset, pa->offset + 4);
  EXPECT_EQ(with_opt[pb->offset], '0');
}

TEST(Pcap, TcpOptionsShiftPayload) {
  FrameSpec s;
  s.doff_words = 8;
  s.payload = "abc";
  const auto bytes = fgtest::as_bytes(fgtest::frame(s));
  const auto r = std::get<PacketRecord>(decode_packet(bytes, kLinkEthernet));
  EXPECT_EQ(r.payload_len, 3u);
  EXPECT_EQ(locate_payload(bytes, kLinkEthernet)->offset, 14u + 20u + 32u);
}

TEST(Pcap, VlanTagUnwrappedOnce) {
  FrameSpec s;
  s.vlan = true;
  const auto r = decode_packet(fgtest::as_bytes(fgtest::frame(s)), kLinkEthernet);
  ASSERT_TRUE(std::holds_alternative<PacketRecord>(r));
  EXPECT_EQ(std::get<PacketRecord>(r).dst_port, 2404);
}

TEST(Pcap, RawIpLinkType) {
  const std::string eth = fgtest::frame({});
  const auto r = decode_packet(fgtest::as_bytes(eth.substr(14)), kLinkRaw);
  ASSERT_TRUE(std::holds_alternative<PacketRecord>(r));
  EXPECT_EQ(std::get<PacketRecord>(r).flags, tcp::kSyn);
}

TEST(Pcap, TruncatedFrameIsSkippedNotFatal) {
  const std::string eth = fgtest::frame({});
  const auto cap = read_bytes(fgtest::pcap_file({{0, 0, eth.substr(0, 40)}, {1, 0, eth}}));
  EXPECT_EQ(cap.stats.truncated, 1u);
  EXPECT_EQ(cap.records.size(), 1u);
}

TEST(Pcap, BadMagic) { EXPECT_EQ(error_of(std::string(24, '\x7f')), ErrorCode::BadMagic); }

TEST(Pcap, PcapngRejectedWithMessage) {
  fgtest::Bytes b;
  b.le32(0x0A0D0D0A).zeros(28);
  try {
    read_bytes(b.data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadMagic);
    EXPECT_NE(std::string(e.what()).find("pcapng"), std::string::npos);
  }
}

TEST(Pcap, TruncatedGlobalHeader) {
  EXPECT_EQ(error_of(fgtest::pcap_file({}).substr(0, 20)), ErrorCode::TruncatedHeader);
}

TEST(Pcap, TruncatedRecordStopsReading) {
  std::string image = fgtest::pcap_file({{0, 0, fgtest::frame({})}, {1, 0, fgtest::frame({})}});
  image.resize(image.size() - 10);
  const auto cap = read_bytes(image);
  EXPECT_EQ(cap.records.size(), 1u);
  EXPECT_TRUE(cap.stats.truncated_tail);
  EXPECT_EQ(cap.stats.truncated, 1u);
}

TEST(Pcap, TotalLengthIsOriginalWireLength) {
  const auto cap = read_bytes(fgtest::pcap_file({{0, 0, fgtest::frame({}), 1514}}));
  ASSERT_EQ(cap.records.size(), 1u);
  EXPECT_EQ(cap.records[0].total_len, 1514u);
}

TEST(Pcap, RecordsStayInFileOrder) {
  FrameSpec a, b;
  b.sport = 2000;
  const auto cap = read_bytes(fgtest::pcap_file({{5, 0, fgtest::frame(a)}, {3, 0, fgtest::frame(b)}, {4, 0, fgtest::frame(a)}}));
  ASSERT_EQ(cap.records.size(), 3u);
  EXPECT_EQ(cap.records[0].ts_us, 5'000'000);
  EXPECT_EQ(cap.records[1].src_port, 2000);
  EXPECT_EQ(cap.records[2].ts_us, 4'000'000);
}

TEST(Pcap, EncodeDecodeRoundTrip) {
  fgtest::SplitMix64 rng(3);
  for (int i = 0; i < 200; ++i) {
    PacketRecord r;
    r.src_ip.value = static_cast<std::uint32_t>(rng.next());
    r.dst_ip.value = static_cast<std::uint32_t>(rng.next());
    r.src_port = static_cast<std::uint16_t>(rng.next());
    r.dst_port = static_cast<std::uint16_t>(rng.next());
    r.ttl = static_cast<std::uint8_t>(rng.next());
    r.flags = static_cast<std::uint8_t>(rng.below(64));
    r.window = static_cast<std::uint16_t>(rng.next());
    std::vector<std::uint8_t> payload(rng.below(1400));
    const auto bytes = encode_frame(r, payload, {static_cast<std::uint32_t>(rng.next()), 7, 9});
    auto decoded = std::get<PacketRecord>(decode_packet(bytes, kLinkEthernet));
    r.payload_len = static_cast<std::uint32_t>(payload.size());
    r.total_len = static_cast<std::uint32_t>(bytes.size());
    EXPECT_EQ(decoded, r);
  }
}

TEST(Pcap, PayloadBytesDoNotAffectRecord) {
  FrameSpec a;
  a.payload = std::string(32, 'a');
  FrameSpec b = a;
  b.payload = std::string(32, '\xEE');
  EXPECT_EQ(std::get<PacketRecord>(decode_packet(fgtest::as_bytes(fgtest::frame(a)), kLinkEthernet)),
            std::get<PacketRecord>(decode_packet(fgtest::as_bytes(fgtest::frame(b)), kLinkEthernet)));
}

TEST(Pcap, WriterOutputReadsBack) {
  std::ostringstream os;
  PcapWriter w(os);
  const auto r1 = fgtest::packet(1'500'000, fgtest::ip(1, 2, 3, 4), 5, fgtest::ip(5, 6, 7, 8), 9, tcp::kAck);
  w.write(r1.ts_us, encode_frame(r1, std::vector<std::uint8_t>(6)));
  fgtest::TempDir dir;
  fgtest::spit(dir / "w.pcap", os.str());
  const auto cap = read_pcap(dir / "w.pcap");
  ASSERT_EQ(cap.records.size(), 1u);
  EXPECT_EQ(cap.records[0].ts_us, 1'500'000);
  EXPECT_EQ(cap.records[0].total_len, 60u);
  EXPECT_EQ(cap.records[0].payload_len, 6u);
}

TEST(Pcap, AddressText) {
  EXPECT_EQ(fgtest::ip(192, 168, 0, 1).to_string(), "192.168.0.1");
  EXPECT_EQ(Ipv4Address::parse("10.0.1.10"), fgtest::ip(10, 0, 1, 10));
  EXPECT_FALSE(Ipv4Address::parse("10.0.1"));
  EXPECT_FALSE(Ipv4Address::parse("10.0.1.256"));
}
