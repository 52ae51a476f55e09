#include <algorithm>
#include <stdexcept>

#include "embnet/harness.hpp"
#include "embnet/tcp.hpp"

namespace embnet {

const char* to_string(ClientState state) {
  switch (state) {
    case ClientState::Closed: return "Closed";
    case ClientState::SynSent: return "SynSent";
    case ClientState::Established: return "Established";
    case ClientState::LastAck: return "LastAck";
    case ClientState::Done: return "Done";
  }
  return "?";
}

namespace {

BridgeConfig host_bridge_config() {
  BridgeConfig cfg;
  cfg.local_udp_port = kBridgeHostPort;
  cfg.peer_ip = Ipv4Address{{192, 168, 1, 10}};
  cfg.peer_udp_port = kBridgeDevicePort;
  return cfg;
}

// Same filler Windows ping uses.
Bytes echo_payload(std::size_t size) {
  Bytes out(size);
  for (std::size_t i = 0; i < size; ++i) out[i] = static_cast<std::uint8_t>('a' + i % 23);
  return out;
}

}  // namespace

HostClient::HostClient(HostOptions opts)
    : opts_(opts),
      iss_gen_(opts.iss_seed),
      next_port_(opts.first_ephemeral_port),
      bridge_(host_bridge_config()) {}

std::optional<MacAddress> HostClient::arp_lookup(Ipv4Address ip) const {
  const auto it = arp_.find(ip);
  if (it == arp_.end()) return std::nullopt;
  return it->second;
}

void HostClient::request_arp(Ipv4Address ip) {
  ArpPacket req{ArpOp::Request, opts_.mac, opts_.ip, MacAddress{}, ip};
  send_(serialize(EthernetFrame{MacAddress::broadcast(), opts_.mac,
                                static_cast<std::uint16_t>(EtherType::Arp), serialize(req)}));
}

void HostClient::receive(ByteView raw, std::int64_t now_us) {
  EthernetFrame frame;
  try {
    frame = parse_frame(raw);
  } catch (const WireError&) {
    return;
  }
  if (frame.dst != opts_.mac && !frame.dst.is_broadcast()) return;
  try {
    if (frame.ethertype == static_cast<std::uint16_t>(EtherType::Arp)) {
      handle_arp(frame);
    } else if (frame.ethertype == static_cast<std::uint16_t>(EtherType::Ipv4)) {
      handle_ipv4(frame, now_us);
    }
  } catch (const WireError&) {
    // A malformed frame from the device is the device's bug; tests look
    // for it in the capture rather than here.
  }
}

void HostClient::handle_arp(const EthernetFrame& frame) {
  const ArpPacket arp = parse_arp(frame.payload);
  if (arp.target_ip != opts_.ip) return;
  arp_[arp.sender_ip] = arp.sender_mac;
  if (arp.op == ArpOp::Request) {
    ArpPacket reply{ArpOp::Reply, opts_.mac, opts_.ip, arp.sender_mac, arp.sender_ip};
    send_(serialize(EthernetFrame{arp.sender_mac, opts_.mac,
                                  static_cast<std::uint16_t>(EtherType::Arp), serialize(reply)}));
  }
}

void HostClient::handle_ipv4(const EthernetFrame& frame, std::int64_t now_us) {
  const Ipv4Packet ip = parse_ipv4(frame.payload);
  if (ip.dst != opts_.ip) return;
  switch (static_cast<IpProto>(ip.protocol)) {
    case IpProto::Icmp: {
      const IcmpEcho echo = parse_icmp_echo(ip.payload);
      if (echo.kind == IcmpKind::Reply && !echo_replies_.count(echo.sequence)) {
        echo_replies_[echo.sequence] = EchoReply{now_us, echo.payload.size(), ip.ttl};
      }
      return;
    }
    case IpProto::Udp: {
      const UdpDatagram dgram = parse_udp(ip.payload, ip.src, ip.dst);
      bridge_.udp_ingress(dgram);
      return;
    }
    case IpProto::Tcp: {
      const TcpSegment seg = parse_tcp(ip.payload, ip.src, ip.dst);
      if (ip.src != tcp_.remote_ip || seg.src_port != tcp_.remote_port ||
          seg.dst_port != tcp_.local_port) {
        return;
      }
      tcp_log_.emplace_back(Direction::DeviceToHost, seg);
      handle_tcp(seg);
      return;
    }
  }
}

void HostClient::send_ip(Ipv4Address dst, std::uint8_t proto, Bytes payload) {
  const auto mac = arp_lookup(dst);
  if (!mac) throw std::logic_error("host: " + dst.to_string() + " is not resolved");
  Ipv4Packet p;
  p.src = opts_.ip;
  p.dst = dst;
  p.ttl = opts_.ttl;
  p.protocol = proto;
  p.identification = ip_id_++;
  p.payload = std::move(payload);
  send_(serialize(EthernetFrame{*mac, opts_.mac, static_cast<std::uint16_t>(EtherType::Ipv4),
                                serialize(p)}));
}

std::uint16_t HostClient::send_echo(Ipv4Address dst, std::size_t payload_size) {
  const std::uint16_t seq = ++echo_seq_;
  IcmpEcho echo{IcmpKind::Request, 1, seq, echo_payload(payload_size)};
  send_ip(dst, static_cast<std::uint8_t>(IpProto::Icmp), serialize(echo));
  return seq;
}

std::optional<EchoReply> HostClient::echo_reply(std::uint16_t seq) const {
  const auto it = echo_replies_.find(seq);
  if (it == echo_replies_.end()) return std::nullopt;
  return it->second;
}

void HostClient::send_udp(Ipv4Address dst, const UdpDatagram& dgram) {
  send_ip(dst, static_cast<std::uint8_t>(IpProto::Udp), serialize(dgram, opts_.ip, dst));
}

// ---------------------------------------------------------------------------
// TCP client

void HostClient::send_tcp(std::uint8_t flags, Bytes payload) {
  TcpSegment seg;
  seg.src_port = tcp_.local_port;
  seg.dst_port = tcp_.remote_port;
  seg.seq = tcp_.snd_nxt;
  seg.ack = (flags & tcp_flags::kAck) ? tcp_.rcv_nxt : 0;
  seg.flags = flags;
  seg.window = opts_.window;
  seg.payload = std::move(payload);
  tcp_.snd_nxt += seg.seq_len();
  tcp_log_.emplace_back(Direction::HostToDevice, seg);
  send_ip(tcp_.remote_ip, static_cast<std::uint8_t>(IpProto::Tcp),
          serialize(seg, opts_.ip, tcp_.remote_ip));
}

void HostClient::tcp_open(Ipv4Address dst, std::uint16_t port, Bytes request) {
  tcp_ = ClientTcp{};
  tcp_.remote_ip = dst;
  tcp_.remote_port = port;
  tcp_.local_port = next_port_;
  next_port_ = next_port_ == 0xffff ? opts_.first_ephemeral_port : next_port_ + 1;
  tcp_.iss = static_cast<std::uint32_t>(iss_gen_());
  tcp_.snd_una = tcp_.iss;
  tcp_.snd_nxt = tcp_.iss;
  tcp_.request = std::move(request);
  tcp_.state = ClientState::SynSent;
  send_tcp(tcp_flags::kSyn);
}

void HostClient::tcp_abort() {
  if (tcp_.state == ClientState::Closed || tcp_.state == ClientState::Done) return;
  if (tcp_.state != ClientState::SynSent) send_tcp(tcp_flags::kRst);
  tcp_.state = ClientState::Done;
}

void HostClient::pump_request() {
  while (tcp_.request_sent < tcp_.request.size()) {
    const std::uint32_t in_flight = tcp_.snd_nxt - tcp_.snd_una;
    if (in_flight >= tcp_.peer_wnd) return;
    const std::size_t room = tcp_.peer_wnd - in_flight;
    const std::size_t left = tcp_.request.size() - tcp_.request_sent;
    const std::size_t n = std::min({left, room, kTcpMss});
    const auto first = tcp_.request.begin() + static_cast<std::ptrdiff_t>(tcp_.request_sent);
    const bool last = n == left;
    send_tcp(tcp_flags::kAck | (last ? tcp_flags::kPsh : 0), Bytes(first, first + n));
    tcp_.request_sent += n;
  }
}

void HostClient::handle_tcp(const TcpSegment& seg) {
  using namespace tcp_flags;
  if (tcp_.state == ClientState::Closed || tcp_.state == ClientState::Done) return;

  if (seg.has(kRst)) {
    tcp_.reset = true;
    tcp_.state = ClientState::Done;
    return;
  }

  if (tcp_.state == ClientState::SynSent) {
    if (!seg.has(kSyn | kAck) || seg.ack != tcp_.iss + 1) return;
    tcp_.rcv_nxt = seg.seq + 1;
    tcp_.snd_una = seg.ack;
    tcp_.peer_wnd = seg.window;
    tcp_.state = ClientState::Established;
    send_tcp(kAck);
    pump_request();
    return;
  }

  if (seg.has(kAck) && seq_lt(tcp_.snd_una, seg.ack) && seq_le(seg.ack, tcp_.snd_nxt)) {
    tcp_.snd_una = seg.ack;
  }
  if (seg.has(kAck)) tcp_.peer_wnd = seg.window;

  if (tcp_.state == ClientState::LastAck) {
    if (seg.has(kAck) && seg.ack == tcp_.snd_nxt) tcp_.state = ClientState::Done;
    return;
  }

  bool ack_needed = false;
  if (!seg.payload.empty()) {
    if (seg.seq == tcp_.rcv_nxt) {
      tcp_.received.insert(tcp_.received.end(), seg.payload.begin(), seg.payload.end());
      tcp_.rcv_nxt += static_cast<std::uint32_t>(seg.payload.size());
    }
    ack_needed = true;
  }
  if (seg.has(kFin) && seg.seq + seg.payload.size() == tcp_.rcv_nxt) {
    tcp_.rcv_nxt += 1;
    tcp_.server_fin = true;
    send_tcp(kAck);
    send_tcp(kFin | kAck);
    tcp_.state = ClientState::LastAck;
    return;
  }
  if (ack_needed) send_tcp(kAck);
  pump_request();
}

}  // namespace embnet
