// Device-side network stack: polls the controller over SPI, answers ARP and
// ICMP echo, and hands UDP to the bridge and TCP to the single-connection
// server machine.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "embnet/nic.hpp"
#include "embnet/tcp.hpp"
#include "embnet/wire.hpp"

namespace embnet {

class Bridge;

inline constexpr std::uint8_t kDefaultTtl = 128;
inline constexpr std::size_t kArpCacheCapacity = 8;
/// Outbound packets parked while their next hop is being resolved.
inline constexpr std::size_t kArpPendingCapacity = 4;

struct NetConfig {
  Ipv4Address ip{{192, 168, 1, 10}};
  Ipv4Address subnet_mask{{255, 255, 255, 0}};
  Ipv4Address gateway{};
  Ipv4Address dns{};  // stored only
  MacAddress mac{{0x02, 0x00, 0x00, 0x00, 0x00, 0x10}};
  std::uint8_t ttl_default = kDefaultTtl;

  bool valid() const;
};

/// True for contiguous-ones masks, including /0 and /32.
bool is_prefix_mask(Ipv4Address mask);

enum class NetErrc { NoGateway, InvalidConfig };

class NetError : public std::runtime_error {
 public:
  NetError(NetErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  NetErrc code() const { return code_; }

 private:
  NetErrc code_;
};

/// `dst` itself when on-link, otherwise the gateway. Throws NoGateway.
Ipv4Address resolve_next_hop(Ipv4Address dst, const NetConfig& cfg);

/// Echo reply for `request` received from `requester`: identifier, sequence
/// and payload copied, addresses swapped, TTL from the config.
Ipv4Packet icmp_echo_reply(const IcmpEcho& request, Ipv4Address requester,
                           const NetConfig& cfg, std::uint16_t identification);

/// Fixed-capacity IP -> MAC map; the oldest insertion is evicted first.
class ArpCache {
 public:
  struct Entry {
    Ipv4Address ip;
    MacAddress mac;
  };

  explicit ArpCache(std::size_t capacity = kArpCacheCapacity) : capacity_(capacity) {}

  void insert(Ipv4Address ip, MacAddress mac);
  std::optional<MacAddress> lookup(Ipv4Address ip) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::vector<Entry> entries_;  // oldest first
};

struct StackStats {
  std::uint64_t frames_read = 0;
  std::uint64_t dispatched = 0;

  std::uint64_t drop_malformed = 0;
  std::uint64_t drop_checksum = 0;
  std::uint64_t drop_not_for_us = 0;
  std::uint64_t drop_unsupported = 0;
  std::uint64_t drop_no_listener = 0;
  std::uint64_t drop_arp_unsolicited = 0;

  std::uint64_t arp_replies_sent = 0;
  std::uint64_t arp_requests_sent = 0;
  std::uint64_t icmp_replies_sent = 0;
  std::uint64_t udp_to_bridge = 0;
  std::uint64_t tcp_segments_in = 0;
  std::uint64_t frames_sent = 0;
  std::uint64_t tx_overflow = 0;
  std::uint64_t unresolved_dropped = 0;

  std::uint64_t dropped() const {
    return drop_malformed + drop_checksum + drop_not_for_us + drop_unsupported +
           drop_no_listener + drop_arp_unsolicited;
  }
};

/// Data an application hands back to the TCP layer.
struct AppReply {
  Bytes data;
  bool close = true;
};

class TcpApplication {
 public:
  virtual ~TcpApplication() = default;
  /// Called after new in-order bytes landed in conn.rx_assembled. Returns
  /// nullopt to wait for more input.
  virtual std::optional<AppReply> on_data(const TcpConn& conn) = 0;
};

class NetStack {
 public:
  struct PollReport {
    std::size_t frames_read = 0;
    std::size_t frames_sent = 0;
  };

  /// Throws NetError{InvalidConfig}.
  NetStack(NetConfig cfg, std::uint32_t iss_seed);

  void attach_tcp_app(TcpApplication* app) { app_ = app; }
  void attach_bridge(Bridge* bridge) { bridge_ = bridge; }

  /// Programs the controller's MAC filter from the config.
  void init(SpiEthernetDriver& drv);
  /// Consumes every pending RX frame and writes all responses.
  PollReport poll(SpiEthernetDriver& drv);
  /// Sends a datagram, resolving the next hop with ARP if needed.
  void send_udp(SpiEthernetDriver& drv, Ipv4Address dst, const UdpDatagram& dgram);

  /// Takes effect for the next frame processed.
  void set_ip(Ipv4Address ip) { cfg_.ip = ip; }

  const NetConfig& config() const { return cfg_; }
  const ArpCache& arp_cache() const { return arp_; }
  const StackStats& stats() const { return stats_; }
  const TcpConn& tcp() const { return tcp_; }

 private:
  struct Pending {
    Ipv4Address next_hop;
    Ipv4Packet packet;
  };

  void handle_frame(SpiEthernetDriver& drv, const Bytes& raw);
  void handle_arp(SpiEthernetDriver& drv, const EthernetFrame& frame);
  void handle_ipv4(SpiEthernetDriver& drv, const EthernetFrame& frame);
  void handle_tcp(SpiEthernetDriver& drv, const MacAddress& peer_mac, const Ipv4Packet& ip);
  void emit_tcp(SpiEthernetDriver& drv, const MacAddress& peer_mac,
                const std::vector<OutSegment>& segs);
  void emit_ip(SpiEthernetDriver& drv, const MacAddress& dst_mac, const Ipv4Packet& packet);
  void emit_frame(SpiEthernetDriver& drv, const EthernetFrame& frame);
  void flush_pending(SpiEthernetDriver& drv, Ipv4Address resolved, const MacAddress& mac);
  std::uint16_t next_id() { return ip_id_++; }

  NetConfig cfg_;
  ArpCache arp_;
  StackStats stats_;
  TcpConn tcp_;
  TcpApplication* app_ = nullptr;
  Bridge* bridge_ = nullptr;
  std::uint16_t ip_id_ = 1;
  std::vector<Pending> pending_;
  std::vector<Ipv4Address> arp_outstanding_;
  std::size_t sent_this_poll_ = 0;
};

}  // namespace embnet
