// Ethernet II / ARP / IPv4 / ICMP / UDP / TCP wire formats.
//
// Every serializer emits big-endian, fixed-size headers (no IP or TCP
// options) and recomputes checksums. Parsers accept what the serializers
// emit plus the usual variations seen from real peers (IP/TCP options,
// Ethernet padding, zero UDP checksum).

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace embnet {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline constexpr std::size_t kMtu = 1500;
inline constexpr std::size_t kEthHeaderLen = 14;
inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kUdpHeaderLen = 8;
inline constexpr std::size_t kTcpHeaderLen = 20;
inline constexpr std::size_t kArpLen = 28;
inline constexpr std::size_t kIcmpHeaderLen = 8;

enum class EtherType : std::uint16_t { Ipv4 = 0x0800, Arp = 0x0806 };

enum class IpProto : std::uint8_t { Icmp = 1, Tcp = 6, Udp = 17 };

enum class WireErrc {
  TooShort,
  PayloadTooLarge,
  BadChecksum,
  Unsupported,
  Malformed,
};

const char* to_string(WireErrc code);

class WireError : public std::runtime_error {
 public:
  WireError(WireErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  WireErrc code() const { return code_; }

 private:
  WireErrc code_;
};

struct MacAddress {
  std::array<std::uint8_t, 6> octets{};

  static constexpr MacAddress broadcast() {
    return MacAddress{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
  }
  bool is_broadcast() const { return *this == broadcast(); }
  bool is_multicast() const { return (octets[0] & 0x01) != 0; }
  bool is_locally_administered() const { return (octets[0] & 0x02) != 0; }

  /// "aa:bb:cc:dd:ee:ff", lowercase.
  std::string to_string() const;
  /// Accepts ':' or '-' separated hex pairs.
  static std::optional<MacAddress> parse(std::string_view text);

  friend bool operator==(const MacAddress&, const MacAddress&) = default;
};

struct Ipv4Address {
  std::array<std::uint8_t, 4> octets{};

  static constexpr Ipv4Address from_u32(std::uint32_t v) {
    return Ipv4Address{{static_cast<std::uint8_t>(v >> 24),
                        static_cast<std::uint8_t>(v >> 16),
                        static_cast<std::uint8_t>(v >> 8),
                        static_cast<std::uint8_t>(v)}};
  }
  constexpr std::uint32_t to_u32() const {
    return (std::uint32_t{octets[0]} << 24) | (std::uint32_t{octets[1]} << 16) |
           (std::uint32_t{octets[2]} << 8) | std::uint32_t{octets[3]};
  }
  bool is_unspecified() const { return to_u32() == 0; }

  std::string to_string() const;
  /// Strict dotted quad: four decimal fields 0..255, no leading '+', no
  /// surrounding whitespace, at most three digits per field.
  static std::optional<Ipv4Address> parse(std::string_view text);

  friend bool operator==(const Ipv4Address&, const Ipv4Address&) = default;
  friend auto operator<=>(const Ipv4Address&, const Ipv4Address&) = default;
};

// ---------------------------------------------------------------------------
// Checksum

/// One's-complement sum folded to 16 bits, not complemented. Odd lengths are
/// padded with a zero byte. Chain calls through `initial`.
std::uint32_t checksum_accumulate(ByteView data, std::uint32_t initial = 0);
std::uint16_t checksum_finish(std::uint32_t sum);
/// RFC 1071 Internet checksum of `data`.
std::uint16_t internet_checksum(ByteView data);

// ---------------------------------------------------------------------------
// Records

struct EthernetFrame {
  MacAddress dst;
  MacAddress src;
  std::uint16_t ethertype = 0;
  Bytes payload;

  friend bool operator==(const EthernetFrame&, const EthernetFrame&) = default;
};

enum class ArpOp : std::uint16_t { Request = 1, Reply = 2 };

struct ArpPacket {
  ArpOp op = ArpOp::Request;
  MacAddress sender_mac;
  Ipv4Address sender_ip;
  MacAddress target_mac;
  Ipv4Address target_ip;

  friend bool operator==(const ArpPacket&, const ArpPacket&) = default;
};

struct Ipv4Packet {
  Ipv4Address src;
  Ipv4Address dst;
  std::uint8_t ttl = 128;
  std::uint8_t protocol = 0;
  std::uint16_t identification = 0;
  Bytes payload;

  friend bool operator==(const Ipv4Packet&, const Ipv4Packet&) = default;
};

enum class IcmpKind : std::uint8_t { Reply = 0, Request = 8 };

struct IcmpEcho {
  IcmpKind kind = IcmpKind::Request;
  std::uint16_t identifier = 0;
  std::uint16_t sequence = 0;
  Bytes payload;

  friend bool operator==(const IcmpEcho&, const IcmpEcho&) = default;
};

struct UdpDatagram {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Bytes payload;

  friend bool operator==(const UdpDatagram&, const UdpDatagram&) = default;
};

namespace tcp_flags {
inline constexpr std::uint8_t kFin = 0x01;
inline constexpr std::uint8_t kSyn = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kPsh = 0x08;
inline constexpr std::uint8_t kAck = 0x10;
}  // namespace tcp_flags

struct TcpSegment {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint8_t flags = 0;
  std::uint16_t window = 0;
  Bytes payload;

  bool has(std::uint8_t f) const { return (flags & f) == f; }
  /// Sequence space consumed: payload bytes plus one each for SYN and FIN.
  std::uint32_t seq_len() const;

  friend bool operator==(const TcpSegment&, const TcpSegment&) = default;
};

/// "SYN|ACK" style rendering, fixed order SYN FIN RST PSH ACK.
std::string flags_to_string(std::uint8_t flags);

// ---------------------------------------------------------------------------
// Parse / serialize

EthernetFrame parse_frame(ByteView bytes);
Bytes serialize(const EthernetFrame& frame);

ArpPacket parse_arp(ByteView bytes);
Bytes serialize(const ArpPacket& arp);

/// Verifies the header checksum; trailing bytes beyond total length
/// (Ethernet padding) are ignored. Fragments are rejected as Unsupported.
Ipv4Packet parse_ipv4(ByteView bytes);
Bytes serialize(const Ipv4Packet& packet);

IcmpEcho parse_icmp_echo(ByteView bytes);
Bytes serialize(const IcmpEcho& echo);

/// Checksum verified against the pseudo-header unless it is zero.
UdpDatagram parse_udp(ByteView bytes, Ipv4Address src, Ipv4Address dst);
Bytes serialize(const UdpDatagram& dgram, Ipv4Address src, Ipv4Address dst);

/// Options, if present, are skipped.
TcpSegment parse_tcp(ByteView bytes, Ipv4Address src, Ipv4Address dst);
Bytes serialize(const TcpSegment& seg, Ipv4Address src, Ipv4Address dst);

/// Sum of the 12-byte pseudo-header used by UDP and TCP.
std::uint32_t pseudo_header_sum(Ipv4Address src, Ipv4Address dst,
                                std::uint8_t protocol, std::size_t length);

// Big-endian helpers shared with the other layers.
inline void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}
inline void put_u32(Bytes& out, std::uint32_t v) {
  put_u16(out, static_cast<std::uint16_t>(v >> 16));
  put_u16(out, static_cast<std::uint16_t>(v));
}
inline std::uint16_t get_u16(ByteView b, std::size_t at) {
  return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}
inline std::uint32_t get_u32(ByteView b, std::size_t at) {
  return (std::uint32_t{get_u16(b, at)} << 16) | get_u16(b, at + 2);
}

inline Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }
inline std::string to_text(ByteView bytes) { return std::string(bytes.begin(), bytes.end()); }

}  // namespace embnet
