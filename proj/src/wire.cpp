#include "embnet/wire.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace embnet {

namespace {

[[noreturn]] void fail(WireErrc code, const std::string& what) {
  throw WireError(code, what);
}

void require(ByteView bytes, std::size_t need, const char* what) {
  if (bytes.size() < need) {
    fail(WireErrc::TooShort, std::string(what) + ": need " + std::to_string(need) +
                                 " bytes, have " + std::to_string(bytes.size()));
  }
}

void put_mac(Bytes& out, const MacAddress& mac) {
  out.insert(out.end(), mac.octets.begin(), mac.octets.end());
}
void put_ip(Bytes& out, const Ipv4Address& ip) {
  out.insert(out.end(), ip.octets.begin(), ip.octets.end());
}
MacAddress get_mac(ByteView b, std::size_t at) {
  MacAddress mac;
  std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(at), 6, mac.octets.begin());
  return mac;
}
Ipv4Address get_ip(ByteView b, std::size_t at) {
  Ipv4Address ip;
  std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(at), 4, ip.octets.begin());
  return ip;
}

void store_u16(Bytes& out, std::size_t at, std::uint16_t v) {
  out[at] = static_cast<std::uint8_t>(v >> 8);
  out[at + 1] = static_cast<std::uint8_t>(v);
}

std::optional<std::uint8_t> hex_byte(std::string_view s) {
  if (s.size() != 2) return std::nullopt;
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + 2, value, 16);
  if (ec != std::errc{} || ptr != s.data() + 2) return std::nullopt;
  return static_cast<std::uint8_t>(value);
}

}  // namespace

const char* to_string(WireErrc code) {
  switch (code) {
    case WireErrc::TooShort: return "TooShort";
    case WireErrc::PayloadTooLarge: return "PayloadTooLarge";
    case WireErrc::BadChecksum: return "BadChecksum";
    case WireErrc::Unsupported: return "Unsupported";
    case WireErrc::Malformed: return "Malformed";
  }
  return "?";
}

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0], octets[1],
                octets[2], octets[3], octets[4], octets[5]);
  return buf;
}

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
  if (text.size() != 17) return std::nullopt;
  const char sep = text[2];
  if (sep != ':' && sep != '-') return std::nullopt;
  MacAddress mac;
  for (std::size_t i = 0; i < 6; ++i) {
    if (i > 0 && text[i * 3 - 1] != sep) return std::nullopt;
    auto b = hex_byte(text.substr(i * 3, 2));
    if (!b) return std::nullopt;
    mac.octets[i] = *b;
  }
  return mac;
}

std::string Ipv4Address::to_string() const {
  return std::to_string(octets[0]) + '.' + std::to_string(octets[1]) + '.' +
         std::to_string(octets[2]) + '.' + std::to_string(octets[3]);
}

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) {
  Ipv4Address ip;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t end = text.find('.', pos);
    if (i == 3) {
      if (end != std::string_view::npos) return std::nullopt;
      end = text.size();
    } else if (end == std::string_view::npos) {
      return std::nullopt;
    }
    const std::string_view field = text.substr(pos, end - pos);
    if (field.empty() || field.size() > 3) return std::nullopt;
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || value > 255) {
      return std::nullopt;
    }
    ip.octets[i] = static_cast<std::uint8_t>(value);
    pos = end + 1;
  }
  return ip;
}

// ---------------------------------------------------------------------------

std::uint32_t checksum_accumulate(ByteView data, std::uint32_t initial) {
  std::uint64_t sum = initial;
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) {
    sum += (std::uint32_t{data[i]} << 8) | data[i + 1];
  }
  if (i < data.size()) sum += std::uint32_t{data[i]} << 8;
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint32_t>(sum);
}

std::uint16_t checksum_finish(std::uint32_t sum) {
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint16_t>(~sum);
}

std::uint16_t internet_checksum(ByteView data) {
  return checksum_finish(checksum_accumulate(data));
}

std::uint32_t pseudo_header_sum(Ipv4Address src, Ipv4Address dst, std::uint8_t protocol,
                                std::size_t length) {
  Bytes ph;
  ph.reserve(12);
  put_ip(ph, src);
  put_ip(ph, dst);
  ph.push_back(0);
  ph.push_back(protocol);
  put_u16(ph, static_cast<std::uint16_t>(length));
  return checksum_accumulate(ph);
}

std::uint32_t TcpSegment::seq_len() const {
  std::uint32_t n = static_cast<std::uint32_t>(payload.size());
  if (flags & tcp_flags::kSyn) ++n;
  if (flags & tcp_flags::kFin) ++n;
  return n;
}

std::string flags_to_string(std::uint8_t flags) {
  static constexpr std::pair<std::uint8_t, const char*> kNames[] = {
      {tcp_flags::kSyn, "SYN"}, {tcp_flags::kFin, "FIN"}, {tcp_flags::kRst, "RST"},
      {tcp_flags::kPsh, "PSH"}, {tcp_flags::kAck, "ACK"}};
  std::string out;
  for (const auto& [bit, name] : kNames) {
    if (flags & bit) {
      if (!out.empty()) out += '|';
      out += name;
    }
  }
  return out.empty() ? "none" : out;
}

// ---------------------------------------------------------------------------
// Ethernet

EthernetFrame parse_frame(ByteView bytes) {
  require(bytes, kEthHeaderLen, "ethernet");
  EthernetFrame f;
  f.dst = get_mac(bytes, 0);
  f.src = get_mac(bytes, 6);
  f.ethertype = get_u16(bytes, 12);
  f.payload.assign(bytes.begin() + kEthHeaderLen, bytes.end());
  return f;
}

Bytes serialize(const EthernetFrame& frame) {
  if (frame.payload.size() > kMtu) {
    fail(WireErrc::PayloadTooLarge,
         "ethernet payload " + std::to_string(frame.payload.size()) + " exceeds MTU");
  }
  Bytes out;
  out.reserve(kEthHeaderLen + frame.payload.size());
  put_mac(out, frame.dst);
  put_mac(out, frame.src);
  put_u16(out, frame.ethertype);
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

// ---------------------------------------------------------------------------
// ARP

ArpPacket parse_arp(ByteView bytes) {
  require(bytes, kArpLen, "arp");
  if (get_u16(bytes, 0) != 1 || get_u16(bytes, 2) != 0x0800 || bytes[4] != 6 ||
      bytes[5] != 4) {
    fail(WireErrc::Unsupported, "arp: not Ethernet/IPv4");
  }
  const std::uint16_t op = get_u16(bytes, 6);
  if (op != 1 && op != 2) fail(WireErrc::Unsupported, "arp: unknown op");
  ArpPacket arp;
  arp.op = static_cast<ArpOp>(op);
  arp.sender_mac = get_mac(bytes, 8);
  arp.sender_ip = get_ip(bytes, 14);
  arp.target_mac = get_mac(bytes, 18);
  arp.target_ip = get_ip(bytes, 24);
  return arp;
}

Bytes serialize(const ArpPacket& arp) {
  Bytes out;
  out.reserve(kArpLen);
  put_u16(out, 1);       // hardware: Ethernet
  put_u16(out, 0x0800);  // protocol: IPv4
  out.push_back(6);
  out.push_back(4);
  put_u16(out, static_cast<std::uint16_t>(arp.op));
  put_mac(out, arp.sender_mac);
  put_ip(out, arp.sender_ip);
  put_mac(out, arp.target_mac);
  put_ip(out, arp.target_ip);
  return out;
}

// ---------------------------------------------------------------------------
// IPv4

Ipv4Packet parse_ipv4(ByteView bytes) {
  require(bytes, kIpv4HeaderLen, "ipv4");
  if ((bytes[0] >> 4) != 4) fail(WireErrc::Unsupported, "ipv4: version != 4");
  const std::size_t header_len = std::size_t{bytes[0] & 0x0fu} * 4;
  if (header_len < kIpv4HeaderLen) fail(WireErrc::Malformed, "ipv4: IHL < 5");
  require(bytes, header_len, "ipv4 header");
  const std::size_t total = get_u16(bytes, 2);
  if (total < header_len) fail(WireErrc::Malformed, "ipv4: total length < header");
  require(bytes, total, "ipv4 total length");
  if (internet_checksum(bytes.first(header_len)) != 0) {
    fail(WireErrc::BadChecksum, "ipv4: header checksum");
  }
  const std::uint16_t frag = get_u16(bytes, 6);
  if ((frag & 0x2000) || (frag & 0x1fff)) fail(WireErrc::Unsupported, "ipv4: fragment");

  Ipv4Packet p;
  p.identification = get_u16(bytes, 4);
  p.ttl = bytes[8];
  p.protocol = bytes[9];
  p.src = get_ip(bytes, 12);
  p.dst = get_ip(bytes, 16);
  p.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header_len),
                   bytes.begin() + static_cast<std::ptrdiff_t>(total));
  return p;
}

Bytes serialize(const Ipv4Packet& packet) {
  const std::size_t total = kIpv4HeaderLen + packet.payload.size();
  if (total > kMtu) {
    fail(WireErrc::PayloadTooLarge, "ipv4: total length " + std::to_string(total));
  }
  Bytes out;
  out.reserve(total);
  out.push_back(0x45);
  out.push_back(0);  // TOS
  put_u16(out, static_cast<std::uint16_t>(total));
  put_u16(out, packet.identification);
  put_u16(out, 0);  // flags / fragment offset
  out.push_back(packet.ttl);
  out.push_back(packet.protocol);
  put_u16(out, 0);
  put_ip(out, packet.src);
  put_ip(out, packet.dst);
  store_u16(out, 10, internet_checksum(out));
  out.insert(out.end(), packet.payload.begin(), packet.payload.end());
  return out;
}

// ---------------------------------------------------------------------------
// ICMP echo

IcmpEcho parse_icmp_echo(ByteView bytes) {
  require(bytes, kIcmpHeaderLen, "icmp");
  if (internet_checksum(bytes) != 0) fail(WireErrc::BadChecksum, "icmp checksum");
  if ((bytes[0] != 0 && bytes[0] != 8) || bytes[1] != 0) {
    fail(WireErrc::Unsupported, "icmp: not an echo message");
  }
  IcmpEcho e;
  e.kind = static_cast<IcmpKind>(bytes[0]);
  e.identifier = get_u16(bytes, 4);
  e.sequence = get_u16(bytes, 6);
  e.payload.assign(bytes.begin() + kIcmpHeaderLen, bytes.end());
  return e;
}

Bytes serialize(const IcmpEcho& echo) {
  if (kIpv4HeaderLen + kIcmpHeaderLen + echo.payload.size() > kMtu) {
    fail(WireErrc::PayloadTooLarge, "icmp payload too large");
  }
  Bytes out;
  out.reserve(kIcmpHeaderLen + echo.payload.size());
  out.push_back(static_cast<std::uint8_t>(echo.kind));
  out.push_back(0);
  put_u16(out, 0);
  put_u16(out, echo.identifier);
  put_u16(out, echo.sequence);
  out.insert(out.end(), echo.payload.begin(), echo.payload.end());
  store_u16(out, 2, internet_checksum(out));
  return out;
}

// ---------------------------------------------------------------------------
// UDP

UdpDatagram parse_udp(ByteView bytes, Ipv4Address src, Ipv4Address dst) {
  require(bytes, kUdpHeaderLen, "udp");
  const std::size_t length = get_u16(bytes, 4);
  if (length < kUdpHeaderLen) fail(WireErrc::Malformed, "udp: length < 8");
  require(bytes, length, "udp length");
  const ByteView region = bytes.first(length);
  if (get_u16(bytes, 6) != 0) {
    const auto sum = checksum_accumulate(
        region, pseudo_header_sum(src, dst, static_cast<std::uint8_t>(IpProto::Udp), length));
    if (checksum_finish(sum) != 0) fail(WireErrc::BadChecksum, "udp checksum");
  }
  UdpDatagram d;
  d.src_port = get_u16(bytes, 0);
  d.dst_port = get_u16(bytes, 2);
  d.payload.assign(region.begin() + kUdpHeaderLen, region.end());
  return d;
}

Bytes serialize(const UdpDatagram& dgram, Ipv4Address src, Ipv4Address dst) {
  const std::size_t length = kUdpHeaderLen + dgram.payload.size();
  if (kIpv4HeaderLen + length > kMtu) fail(WireErrc::PayloadTooLarge, "udp payload too large");
  Bytes out;
  out.reserve(length);
  put_u16(out, dgram.src_port);
  put_u16(out, dgram.dst_port);
  put_u16(out, static_cast<std::uint16_t>(length));
  put_u16(out, 0);
  out.insert(out.end(), dgram.payload.begin(), dgram.payload.end());
  std::uint16_t sum = checksum_finish(checksum_accumulate(
      out, pseudo_header_sum(src, dst, static_cast<std::uint8_t>(IpProto::Udp), length)));
  // A computed zero is transmitted as all ones; zero means "no checksum".
  if (sum == 0) sum = 0xffff;
  store_u16(out, 6, sum);
  return out;
}

// ---------------------------------------------------------------------------
// TCP

TcpSegment parse_tcp(ByteView bytes, Ipv4Address src, Ipv4Address dst) {
  require(bytes, kTcpHeaderLen, "tcp");
  const std::size_t offset = std::size_t{static_cast<std::uint8_t>(bytes[12] >> 4)} * 4;
  if (offset < kTcpHeaderLen) fail(WireErrc::Malformed, "tcp: data offset < 5");
  require(bytes, offset, "tcp header");
  const auto sum = checksum_accumulate(
      bytes, pseudo_header_sum(src, dst, static_cast<std::uint8_t>(IpProto::Tcp), bytes.size()));
  if (checksum_finish(sum) != 0) fail(WireErrc::BadChecksum, "tcp checksum");

  TcpSegment s;
  s.src_port = get_u16(bytes, 0);
  s.dst_port = get_u16(bytes, 2);
  s.seq = get_u32(bytes, 4);
  s.ack = get_u32(bytes, 8);
  s.flags = bytes[13] & 0x1f;
  s.window = get_u16(bytes, 14);
  s.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  return s;
}

Bytes serialize(const TcpSegment& seg, Ipv4Address src, Ipv4Address dst) {
  const std::size_t length = kTcpHeaderLen + seg.payload.size();
  if (kIpv4HeaderLen + length > kMtu) fail(WireErrc::PayloadTooLarge, "tcp payload too large");
  Bytes out;
  out.reserve(length);
  put_u16(out, seg.src_port);
  put_u16(out, seg.dst_port);
  put_u32(out, seg.seq);
  put_u32(out, seg.ack);
  out.push_back(0x50);  // data offset 5
  out.push_back(seg.flags & 0x1f);
  put_u16(out, seg.window);
  put_u16(out, 0);  // checksum
  put_u16(out, 0);  // urgent pointer
  out.insert(out.end(), seg.payload.begin(), seg.payload.end());
  store_u16(out, 16,
            checksum_finish(checksum_accumulate(
                out, pseudo_header_sum(src, dst, static_cast<std::uint8_t>(IpProto::Tcp),
                                       length))));
  return out;
}

}  // namespace embnet
