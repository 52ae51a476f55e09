#include <random>

#include "doctest.h"
#include "embnet/wire.hpp"
#include "support.hpp"

using namespace embnet;
using testsupport::hex;
using testsupport::oracle_checksum;

namespace {

const Ipv4Address kDev{{192, 168, 1, 10}};
const Ipv4Address kHost{{192, 168, 1, 11}};
const MacAddress kDevMac{{0x02, 0, 0, 0, 0, 0x10}};
const MacAddress kHostMac{{0x02, 0, 0, 0, 0, 0x11}};

}  // namespace

TEST_CASE("checksum: fixed vectors") {
  CHECK(internet_checksum({}) == 0xFFFF);
  const Bytes v = hex("00 01 F2 03 F4 F5 F6 F7");
  CHECK(internet_checksum(v) == 0x220D);
  CHECK(oracle_checksum(v) == 0x220D);
  CHECK(testsupport::modular_checksum(v) == 0x220D);
  // Odd length pads with a zero byte.
  CHECK(internet_checksum(hex("01")) == static_cast<std::uint16_t>(~0x0100));
}

TEST_CASE("checksum: chained accumulation equals one pass") {
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Bytes a = testsupport::random_bytes(rng, 2 * (rng() % 40));
    const Bytes b = testsupport::random_bytes(rng, rng() % 81);
    const auto whole = internet_checksum(testsupport::concat(a, b));
    CHECK(checksum_finish(checksum_accumulate(b, checksum_accumulate(a))) == whole);
  }
}

TEST_CASE("checksum: agrees with oracle and self-verifies") {
  std::mt19937 rng(2024);
  for (int i = 0; i < 500; ++i) {
    Bytes data = testsupport::random_bytes(rng, 2 + rng() % 300);
    CHECK(internet_checksum(data) == oracle_checksum(data));
    CHECK(internet_checksum(data) == testsupport::modular_checksum(data));

    const std::size_t at = 2 * (rng() % (data.size() / 2));
    data[at] = data[at + 1] = 0;
    const auto c = internet_checksum(data);
    data[at] = static_cast<std::uint8_t>(c >> 8);
    data[at + 1] = static_cast<std::uint8_t>(c);
    CHECK(internet_checksum(data) == 0);
  }
}

TEST_CASE("addresses: parse and print") {
  CHECK(Ipv4Address::parse("192.168.1.10") == kDev);
  CHECK(kDev.to_string() == "192.168.1.10");
  CHECK_FALSE(Ipv4Address::parse("192.168.1"));
  CHECK_FALSE(Ipv4Address::parse("192.168.1.256"));
  CHECK_FALSE(Ipv4Address::parse("192.168.1.1 "));
  CHECK_FALSE(Ipv4Address::parse("1.2.3.0004"));
  CHECK(Ipv4Address::from_u32(0xC0A8010A) == kDev);
  CHECK(MacAddress::parse("02:00:00:00:00:10") == kDevMac);
  CHECK(MacAddress::parse("02-00-00-00-00-10") == kDevMac);
  CHECK_FALSE(MacAddress::parse("02:00:00:00:00"));
  CHECK(kDevMac.to_string() == "02:00:00:00:00:10");
  CHECK(MacAddress::broadcast().is_broadcast());
  CHECK(kDevMac.is_locally_administered());
  CHECK_FALSE(kDevMac.is_multicast());
}

TEST_CASE("ethernet: boundaries and round trip") {
  CHECK_THROWS_AS(parse_frame(Bytes(13, 0)), WireError);
  try {
    parse_frame(Bytes(13, 0));
  } catch (const WireError& e) {
    CHECK(e.code() == WireErrc::TooShort);
  }
  EthernetFrame big{kHostMac, kDevMac, 0x0800, Bytes(kMtu + 1, 0)};
  CHECK_THROWS_AS(serialize(big), WireError);

  EthernetFrame f{kHostMac, kDevMac, 0x0806, hex("deadbeef")};
  const Bytes raw = serialize(f);
  CHECK(raw == hex("020000000011 020000000010 0806 deadbeef"));
  CHECK(parse_frame(raw) == f);
  CHECK(serialize(parse_frame(raw)) == raw);
}

TEST_CASE("arp: hand-written byte table") {
  ArpPacket who{ArpOp::Request, kHostMac, kHost, MacAddress{}, kDev};
  const Bytes raw = serialize(who);
  CHECK(raw == hex("0001 0800 06 04 0001"
                   "020000000011 c0a8010b"
                   "000000000000 c0a8010a"));
  CHECK(parse_arp(raw) == who);

  // Through an Ethernet frame with ethertype 0x0806.
  const Bytes frame = serialize(EthernetFrame{MacAddress::broadcast(), kHostMac, 0x0806, raw});
  CHECK(frame[12] == 0x08);
  CHECK(frame[13] == 0x06);
  CHECK(parse_arp(parse_frame(frame).payload) == who);
}

TEST_CASE("ipv4: header layout, TTL 128 and checksum") {
  Ipv4Packet p;
  p.src = kDev;
  p.dst = kHost;
  p.ttl = 128;
  p.protocol = 1;
  p.identification = 1;
  p.payload = Bytes(8, 0xab);
  const Bytes raw = serialize(p);
  REQUIRE(raw.size() == 28);
  CHECK(raw[8] == 0x80);
  // Everything except the checksum field against a hand-written header.
  Bytes expected = hex("4500 001c 0001 0000 8001 0000 c0a8010a c0a8010b");
  const auto csum = oracle_checksum(expected);
  expected[10] = static_cast<std::uint8_t>(csum >> 8);
  expected[11] = static_cast<std::uint8_t>(csum);
  CHECK(Bytes(raw.begin(), raw.begin() + 20) == expected);
  CHECK(oracle_checksum(Bytes(raw.begin(), raw.begin() + 20)) == 0);
  CHECK(parse_ipv4(raw) == p);

  Bytes corrupt = raw;
  corrupt[10] ^= 0x01;
  try {
    parse_ipv4(corrupt);
    FAIL("corrupt header accepted");
  } catch (const WireError& e) {
    CHECK(e.code() == WireErrc::BadChecksum);
  }

  // Ethernet minimum-size padding after the datagram is ignored.
  Bytes padded = raw;
  padded.resize(46, 0);
  CHECK(parse_ipv4(padded) == p);
}

TEST_CASE("udp: empty payload and pseudo-header checksum") {
  const UdpDatagram d{5050, 5051, {}};
  const Bytes raw = serialize(d, kDev, kHost);
  REQUIRE(raw.size() == 8);
  CHECK(raw[4] == 0);
  CHECK(raw[5] == 8);
  CHECK(oracle_checksum(testsupport::concat(
            testsupport::pseudo_header(kDev.octets, kHost.octets, 17, 8), raw)) == 0);
  CHECK(parse_udp(raw, kDev, kHost) == d);

  // A zero checksum means "not computed" and is accepted.
  Bytes unchecked = raw;
  unchecked[6] = unchecked[7] = 0;
  CHECK(parse_udp(unchecked, kDev, kHost) == d);
}

TEST_CASE("tcp: SYN|ACK bytes and checksum against pseudo-header oracle") {
  TcpSegment s;
  s.src_port = 80;
  s.dst_port = 49152;
  s.seq = 0x01020304;
  s.ack = 0xa0b0c0d1;
  s.flags = tcp_flags::kSyn | tcp_flags::kAck;
  s.window = 2048;
  const Bytes raw = serialize(s, kDev, kHost);
  REQUIRE(raw.size() == 20);
  Bytes expected = hex("0050 c000 01020304 a0b0c0d1 50 12 0800 0000 0000");
  const auto csum =
      oracle_checksum(testsupport::concat(testsupport::pseudo_header(kDev.octets, kHost.octets, 6, 20),
                                          expected));
  expected[16] = static_cast<std::uint8_t>(csum >> 8);
  expected[17] = static_cast<std::uint8_t>(csum);
  CHECK(raw == expected);
  CHECK(parse_tcp(raw, kDev, kHost) == s);
  CHECK(s.seq_len() == 1);
  CHECK(flags_to_string(s.flags) == "SYN|ACK");

  // Wrong pseudo-header (addresses swapped) breaks verification.
  Bytes other = raw;
  other[0] ^= 0x01;
  CHECK_THROWS_AS(parse_tcp(other, kDev, kHost), WireError);
}

TEST_CASE("tcp: options are skipped") {
  // Data offset 6 with a 4-byte MSS option, then one payload byte.
  Bytes raw = hex("c000 0050 00000001 00000000 60 02 2000 0000 0000 020405b4 41");
  const auto csum = oracle_checksum(
      testsupport::concat(testsupport::pseudo_header(kHost.octets, kDev.octets, 6, raw.size()), raw));
  raw[16] = static_cast<std::uint8_t>(csum >> 8);
  raw[17] = static_cast<std::uint8_t>(csum);
  const TcpSegment s = parse_tcp(raw, kHost, kDev);
  CHECK(s.flags == tcp_flags::kSyn);
  CHECK(s.payload == Bytes{0x41});
}

TEST_CASE("icmp: echo layout") {
  const IcmpEcho e{IcmpKind::Request, 1, 1, to_bytes("abcd")};
  const Bytes raw = serialize(e);
  Bytes expected = hex("08 00 0000 0001 0001 61626364");
  const auto csum = oracle_checksum(expected);
  expected[2] = static_cast<std::uint8_t>(csum >> 8);
  expected[3] = static_cast<std::uint8_t>(csum);
  CHECK(raw == expected);
  CHECK(parse_icmp_echo(raw) == e);
}

TEST_CASE("round trip: randomized records") {
  std::mt19937 rng(77);
  auto ip = [&] { return Ipv4Address::from_u32(static_cast<std::uint32_t>(rng())); };
  auto mac = [&] {
    MacAddress m;
    for (auto& o : m.octets) o = static_cast<std::uint8_t>(rng());
    return m;
  };
  for (int i = 0; i < 300; ++i) {
    const EthernetFrame f{mac(), mac(), static_cast<std::uint16_t>(rng()),
                          testsupport::random_bytes(rng, rng() % (kMtu + 1))};
    CHECK(parse_frame(serialize(f)) == f);

    const ArpPacket a{rng() % 2 ? ArpOp::Request : ArpOp::Reply, mac(), ip(), mac(), ip()};
    CHECK(parse_arp(serialize(a)) == a);

    Ipv4Packet p;
    p.src = ip();
    p.dst = ip();
    p.ttl = static_cast<std::uint8_t>(1 + rng() % 255);
    p.protocol = static_cast<std::uint8_t>(rng());
    p.identification = static_cast<std::uint16_t>(rng());
    p.payload = testsupport::random_bytes(rng, rng() % (kMtu - kIpv4HeaderLen + 1));
    CHECK(parse_ipv4(serialize(p)) == p);

    const IcmpEcho e{rng() % 2 ? IcmpKind::Request : IcmpKind::Reply,
                     static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()),
                     testsupport::random_bytes(rng, rng() % 100)};
    CHECK(parse_icmp_echo(serialize(e)) == e);

    const UdpDatagram d{static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()),
                        testsupport::random_bytes(rng, rng() % 200)};
    const auto s = ip(), t = ip();
    CHECK(parse_udp(serialize(d, s, t), s, t) == d);

    TcpSegment seg;
    seg.src_port = static_cast<std::uint16_t>(rng());
    seg.dst_port = static_cast<std::uint16_t>(rng());
    seg.seq = static_cast<std::uint32_t>(rng());
    seg.ack = static_cast<std::uint32_t>(rng());
    seg.flags = static_cast<std::uint8_t>(rng() & 0x1f);
    seg.window = static_cast<std::uint16_t>(rng());
    seg.payload = testsupport::random_bytes(rng, rng() % 200);
    CHECK(parse_tcp(serialize(seg, s, t), s, t) == seg);
  }
}
