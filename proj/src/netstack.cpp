#include "embnet/netstack.hpp"

#include <algorithm>

#include "embnet/bridge.hpp"

namespace embnet {

bool is_prefix_mask(Ipv4Address mask) {
  const std::uint32_t m = mask.to_u32();
  // Contiguous ones from the top: inverting gives 0...01...1, and adding one
  // to that yields a power of two (or zero for /0).
  const std::uint32_t inv = ~m;
  return (inv & (inv + 1)) == 0;
}

bool NetConfig::valid() const {
  return is_prefix_mask(subnet_mask) && !ip.is_unspecified() && ttl_default > 0 &&
         !mac.is_multicast();
}

Ipv4Address resolve_next_hop(Ipv4Address dst, const NetConfig& cfg) {
  const std::uint32_t mask = cfg.subnet_mask.to_u32();
  if ((dst.to_u32() & mask) == (cfg.ip.to_u32() & mask)) return dst;
  if (cfg.gateway.is_unspecified()) {
    throw NetError(NetErrc::NoGateway, dst.to_string() + " is off-subnet and no gateway is set");
  }
  return cfg.gateway;
}

Ipv4Packet icmp_echo_reply(const IcmpEcho& request, Ipv4Address requester, const NetConfig& cfg,
                           std::uint16_t identification) {
  IcmpEcho reply = request;
  reply.kind = IcmpKind::Reply;
  Ipv4Packet p;
  p.src = cfg.ip;
  p.dst = requester;
  p.ttl = cfg.ttl_default;
  p.protocol = static_cast<std::uint8_t>(IpProto::Icmp);
  p.identification = identification;
  p.payload = serialize(reply);
  return p;
}

void ArpCache::insert(Ipv4Address ip, MacAddress mac) {
  std::erase_if(entries_, [&](const Entry& e) { return e.ip == ip; });
  if (entries_.size() == capacity_) entries_.erase(entries_.begin());
  entries_.push_back(Entry{ip, mac});
}

std::optional<MacAddress> ArpCache::lookup(Ipv4Address ip) const {
  for (const auto& e : entries_) {
    if (e.ip == ip) return e.mac;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

NetStack::NetStack(NetConfig cfg, std::uint32_t iss_seed)
    : cfg_(cfg), tcp_(make_listener(kHttpPort, iss_seed)) {
  if (!cfg_.valid()) throw NetError(NetErrc::InvalidConfig, "invalid network configuration");
}

void NetStack::init(SpiEthernetDriver& drv) {
  drv.reset();
  drv.set_mac(cfg_.mac);
  drv.set_promiscuous(false);
}

NetStack::PollReport NetStack::poll(SpiEthernetDriver& drv) {
  PollReport report;
  sent_this_poll_ = 0;
  while (drv.read_status().int_pending) {
    auto frame = drv.read_frame();
    if (!frame) break;
    ++stats_.frames_read;
    ++report.frames_read;
    handle_frame(drv, *frame);
  }
  report.frames_sent = sent_this_poll_;
  return report;
}

void NetStack::handle_frame(SpiEthernetDriver& drv, const Bytes& raw) {
  EthernetFrame frame;
  try {
    frame = parse_frame(raw);
  } catch (const WireError&) {
    ++stats_.drop_malformed;
    return;
  }
  switch (frame.ethertype) {
    case static_cast<std::uint16_t>(EtherType::Arp):
      handle_arp(drv, frame);
      break;
    case static_cast<std::uint16_t>(EtherType::Ipv4):
      handle_ipv4(drv, frame);
      break;
    default:
      ++stats_.drop_unsupported;
  }
}

void NetStack::handle_arp(SpiEthernetDriver& drv, const EthernetFrame& frame) {
  ArpPacket arp;
  try {
    arp = parse_arp(frame.payload);
  } catch (const WireError& e) {
    ++(e.code() == WireErrc::Unsupported ? stats_.drop_unsupported : stats_.drop_malformed);
    return;
  }

  if (arp.op == ArpOp::Request) {
    if (arp.target_ip != cfg_.ip) {
      ++stats_.drop_not_for_us;
      return;
    }
    ++stats_.dispatched;
    arp_.insert(arp.sender_ip, arp.sender_mac);
    ArpPacket reply{ArpOp::Reply, cfg_.mac, cfg_.ip, arp.sender_mac, arp.sender_ip};
    emit_frame(drv, EthernetFrame{arp.sender_mac, cfg_.mac,
                                  static_cast<std::uint16_t>(EtherType::Arp), serialize(reply)});
    ++stats_.arp_replies_sent;
    return;
  }

  const auto it = std::find(arp_outstanding_.begin(), arp_outstanding_.end(), arp.sender_ip);
  if (it == arp_outstanding_.end() || arp.target_ip != cfg_.ip) {
    ++stats_.drop_arp_unsolicited;
    return;
  }
  ++stats_.dispatched;
  arp_outstanding_.erase(it);
  arp_.insert(arp.sender_ip, arp.sender_mac);
  flush_pending(drv, arp.sender_ip, arp.sender_mac);
}

void NetStack::handle_ipv4(SpiEthernetDriver& drv, const EthernetFrame& frame) {
  Ipv4Packet ip;
  try {
    ip = parse_ipv4(frame.payload);
  } catch (const WireError& e) {
    switch (e.code()) {
      case WireErrc::BadChecksum: ++stats_.drop_checksum; break;
      case WireErrc::Unsupported: ++stats_.drop_unsupported; break;
      default: ++stats_.drop_malformed;
    }
    return;
  }
  if (ip.dst != cfg_.ip) {
    ++stats_.drop_not_for_us;
    return;
  }

  try {
    switch (static_cast<IpProto>(ip.protocol)) {
      case IpProto::Icmp: {
        const IcmpEcho echo = parse_icmp_echo(ip.payload);
        if (echo.kind != IcmpKind::Request) {
          ++stats_.drop_unsupported;
          return;
        }
        ++stats_.dispatched;
        emit_ip(drv, frame.src, icmp_echo_reply(echo, ip.src, cfg_, next_id()));
        ++stats_.icmp_replies_sent;
        return;
      }
      case IpProto::Udp: {
        const UdpDatagram dgram = parse_udp(ip.payload, ip.src, ip.dst);
        if (bridge_ && bridge_->udp_ingress(dgram) != UdpIngressResult::WrongPort) {
          ++stats_.dispatched;
          ++stats_.udp_to_bridge;
        } else {
          ++stats_.drop_no_listener;
        }
        return;
      }
      case IpProto::Tcp:
        handle_tcp(drv, frame.src, ip);
        return;
    }
  } catch (const WireError& e) {
    switch (e.code()) {
      case WireErrc::BadChecksum: ++stats_.drop_checksum; break;
      case WireErrc::Unsupported: ++stats_.drop_unsupported; break;
      default: ++stats_.drop_malformed;
    }
    return;
  }
  ++stats_.drop_unsupported;
}

void NetStack::handle_tcp(SpiEthernetDriver& drv, const MacAddress& peer_mac,
                          const Ipv4Packet& ip) {
  const TcpSegment seg = parse_tcp(ip.payload, ip.src, ip.dst);
  ++stats_.dispatched;
  ++stats_.tcp_segments_in;

  SegmentResult r = on_segment(tcp_, ip.src, seg);
  emit_tcp(drv, peer_mac, r.out);

  if (tcp_.state != TcpState::Established || tcp_.close_after_send) return;
  if (!r.delivered.empty() && app_) {
    if (auto reply = app_->on_data(tcp_)) {
      emit_tcp(drv, peer_mac, app_send(tcp_, reply->data, reply->close));
      return;
    }
  }
  if (tcp_.peer_fin) emit_tcp(drv, peer_mac, app_close(tcp_));
}

void NetStack::emit_tcp(SpiEthernetDriver& drv, const MacAddress& peer_mac,
                        const std::vector<OutSegment>& segs) {
  for (const auto& o : segs) {
    Ipv4Packet p;
    p.src = cfg_.ip;
    p.dst = o.dst_ip;
    p.ttl = cfg_.ttl_default;
    p.protocol = static_cast<std::uint8_t>(IpProto::Tcp);
    p.identification = next_id();
    p.payload = serialize(o.seg, cfg_.ip, o.dst_ip);
    emit_ip(drv, peer_mac, p);
  }
}

void NetStack::emit_ip(SpiEthernetDriver& drv, const MacAddress& dst_mac,
                       const Ipv4Packet& packet) {
  emit_frame(drv, EthernetFrame{dst_mac, cfg_.mac, static_cast<std::uint16_t>(EtherType::Ipv4),
                                serialize(packet)});
}

void NetStack::emit_frame(SpiEthernetDriver& drv, const EthernetFrame& frame) {
  if (drv.write_frame(serialize(frame))) {
    ++stats_.frames_sent;
    ++sent_this_poll_;
  } else {
    ++stats_.tx_overflow;
  }
}

void NetStack::send_udp(SpiEthernetDriver& drv, Ipv4Address dst, const UdpDatagram& dgram) {
  Ipv4Packet p;
  p.src = cfg_.ip;
  p.dst = dst;
  p.ttl = cfg_.ttl_default;
  p.protocol = static_cast<std::uint8_t>(IpProto::Udp);
  p.payload = serialize(dgram, cfg_.ip, dst);

  Ipv4Address hop;
  try {
    hop = resolve_next_hop(dst, cfg_);
  } catch (const NetError&) {
    ++stats_.unresolved_dropped;
    return;
  }
  if (auto mac = arp_.lookup(hop)) {
    p.identification = next_id();
    emit_ip(drv, *mac, p);
    return;
  }

  if (pending_.size() == kArpPendingCapacity) {
    ++stats_.unresolved_dropped;
    return;
  }
  pending_.push_back(Pending{hop, std::move(p)});
  if (std::find(arp_outstanding_.begin(), arp_outstanding_.end(), hop) == arp_outstanding_.end()) {
    arp_outstanding_.push_back(hop);
    ArpPacket req{ArpOp::Request, cfg_.mac, cfg_.ip, MacAddress{}, hop};
    emit_frame(drv, EthernetFrame{MacAddress::broadcast(), cfg_.mac,
                                  static_cast<std::uint16_t>(EtherType::Arp), serialize(req)});
    ++stats_.arp_requests_sent;
  }
}

void NetStack::flush_pending(SpiEthernetDriver& drv, Ipv4Address resolved,
                             const MacAddress& mac) {
  std::vector<Pending> keep;
  for (auto& p : pending_) {
    if (p.next_hop == resolved) {
      p.packet.identification = next_id();
      emit_ip(drv, mac, p.packet);
    } else {
      keep.push_back(std::move(p));
    }
  }
  pending_ = std::move(keep);
}

}  // namespace embnet
