// Virtual LAN for exercising the device: a seeded cable, a notebook-style
// host, and a testbed that runs both on one simulated clock.
//
// Single-threaded discrete-event loop. The only thing that advances time is
// the wire's next delivery; device and host react at that instant, so a run
// is a pure function of (seed, options, operations).

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "embnet/bridge.hpp"
#include "embnet/smart_device.hpp"
#include "embnet/wire.hpp"

namespace embnet {

inline constexpr std::int64_t kMicrosPerMilli = 1000;

// ---------------------------------------------------------------------------
// Cable

enum class Direction { HostToDevice, DeviceToHost };

const char* to_string(Direction dir);

struct WireOptions {
  std::uint64_t seed = 1;
  double loss = 0.0;
  std::int64_t latency_min_ms = 1;
  std::int64_t latency_max_ms = 3;
};

struct CapturedFrame {
  std::int64_t t_us = 0;  // time the frame was put on the wire
  Direction dir = Direction::HostToDevice;
  Bytes frame;
  bool lost = false;
};

class VirtualWire {
 public:
  /// Throws std::invalid_argument for a bad latency range or loss outside [0,1].
  explicit VirtualWire(WireOptions opts = {});

  /// Frames in one direction arrive in send order: a later frame never
  /// overtakes an earlier one even if it drew a shorter latency.
  void send(Direction dir, Bytes frame, std::int64_t now_us);

  std::optional<std::int64_t> next_delivery() const;
  struct Delivery {
    Direction dir;
    Bytes frame;
  };
  /// Everything due at or before `now_us`, in delivery-time order.
  std::vector<Delivery> take_due(std::int64_t now_us);
  bool idle() const { return queues_[0].empty() && queues_[1].empty(); }

  const std::vector<CapturedFrame>& capture() const { return capture_; }
  const WireOptions& options() const { return opts_; }

 private:
  struct InFlight {
    std::int64_t at_us;
    std::uint64_t order;
    Bytes frame;
  };

  WireOptions opts_;
  std::mt19937_64 rng_;
  std::deque<InFlight> queues_[2];
  std::int64_t last_at_[2] = {0, 0};
  std::uint64_t order_ = 0;
  std::vector<CapturedFrame> capture_;
};

/// Classic libpcap file, microsecond timestamps, Ethernet link type.
/// Lost frames are included: the capture taps the sender side.
Bytes encode_pcap(const std::vector<CapturedFrame>& frames);
void write_pcap(const std::string& path, const std::vector<CapturedFrame>& frames);

// ---------------------------------------------------------------------------
// Host

struct HostOptions {
  MacAddress mac{{0x02, 0x00, 0x00, 0x00, 0x00, 0x11}};
  Ipv4Address ip{{192, 168, 1, 11}};
  std::uint8_t ttl = 128;
  std::uint16_t window = 8192;
  std::uint16_t first_ephemeral_port = 49152;
  std::uint32_t iss_seed = 0x5eed;
};

enum class ClientState { Closed, SynSent, Established, LastAck, Done };

const char* to_string(ClientState state);

/// Active-open side of one TCP exchange. Sends its request once connected,
/// ACKs every data segment, answers the server's FIN with ACK then FIN.
struct ClientTcp {
  ClientState state = ClientState::Closed;
  Ipv4Address remote_ip;
  std::uint16_t remote_port = 0;
  std::uint16_t local_port = 0;
  std::uint32_t iss = 0;
  std::uint32_t snd_una = 0;
  std::uint32_t snd_nxt = 0;
  std::uint32_t peer_wnd = 0;
  std::uint32_t rcv_nxt = 0;
  Bytes request;
  std::size_t request_sent = 0;
  Bytes received;
  bool server_fin = false;
  bool reset = false;
};

struct EchoReply {
  std::int64_t at_us = 0;
  std::size_t bytes = 0;
  std::uint8_t ttl = 0;
};

class HostClient {
 public:
  using Sender = std::function<void(Bytes)>;

  explicit HostClient(HostOptions opts = {});

  void attach(Sender send) { send_ = std::move(send); }
  void receive(ByteView frame, std::int64_t now_us);

  const HostOptions& options() const { return opts_; }
  std::optional<MacAddress> arp_lookup(Ipv4Address ip) const;
  void request_arp(Ipv4Address ip);

  /// Returns the sequence number used. Destination must be resolved.
  std::uint16_t send_echo(Ipv4Address dst, std::size_t payload_size);
  std::optional<EchoReply> echo_reply(std::uint16_t seq) const;

  /// Starts a fresh connection carrying `request`. Destination must be resolved.
  void tcp_open(Ipv4Address dst, std::uint16_t port, Bytes request);
  /// Abandons the connection with an RST so the server slot is freed.
  void tcp_abort();
  const ClientTcp& tcp() const { return tcp_; }
  /// Every TCP segment this host sent or received, in order.
  const std::vector<std::pair<Direction, TcpSegment>>& tcp_log() const { return tcp_log_; }
  void clear_tcp_log() { tcp_log_.clear(); }

  void send_udp(Ipv4Address dst, const UdpDatagram& dgram);
  /// Host half of the bridge, listening on the host bridge port.
  Bridge& bridge() { return bridge_; }

 private:
  void handle_arp(const EthernetFrame& frame);
  void handle_ipv4(const EthernetFrame& frame, std::int64_t now_us);
  void handle_tcp(const TcpSegment& seg);
  void send_ip(Ipv4Address dst, std::uint8_t proto, Bytes payload);
  void send_tcp(std::uint8_t flags, Bytes payload = {});
  void pump_request();

  HostOptions opts_;
  Sender send_;
  std::map<Ipv4Address, MacAddress> arp_;
  std::uint16_t ip_id_ = 1;
  std::uint16_t echo_seq_ = 0;
  std::map<std::uint16_t, EchoReply> echo_replies_;
  std::mt19937 iss_gen_;
  std::uint16_t next_port_;
  ClientTcp tcp_;
  std::vector<std::pair<Direction, TcpSegment>> tcp_log_;
  Bridge bridge_;
};

// ---------------------------------------------------------------------------
// Testbed

struct PingResult {
  bool reply = false;
  std::size_t bytes = 0;
  std::int64_t time_ms = 0;
  std::uint8_t ttl = 0;
};

/// Windows ping layout: banner, then one line per echo.
std::string format_ping_report(const std::vector<PingResult>& results, Ipv4Address target,
                               std::size_t payload_size);

enum class HarnessErrc { Timeout, ConnectionReset };

const char* to_string(HarnessErrc code);

struct HttpResult {
  std::optional<HarnessErrc> error;
  int status = 0;
  FieldList headers;
  std::string body;
  Bytes raw;
  bool server_fin = false;
};

struct TestbedOptions {
  DeviceOptions device;
  WireOptions wire;
  HostOptions host;
  std::int64_t ping_timeout_us = 1000 * kMicrosPerMilli;
  std::int64_t ping_interval_us = 1000 * kMicrosPerMilli;
  std::int64_t http_timeout_us = 5000 * kMicrosPerMilli;
  std::int64_t bridge_timeout_us = 1000 * kMicrosPerMilli;
};

class Testbed {
 public:
  explicit Testbed(TestbedOptions opts = {});
  Testbed(const Testbed&) = delete;
  Testbed& operator=(const Testbed&) = delete;

  std::int64_t now_us() const { return now_us_; }
  /// Runs every event up to now + `us`, then lets the device idle once.
  void advance(std::int64_t us);
  /// Runs events until `done` holds or `deadline_us` passes. The clock ends
  /// at the satisfying event or at the deadline.
  bool run_until(const std::function<bool()>& done, std::int64_t deadline_us);
  void set_link(bool up);

  std::vector<PingResult> ping(Ipv4Address target, int count = 4, std::size_t size = 32);

  HttpResult http_get(const std::string& target);
  HttpResult http_post(const std::string& target, const std::string& body);
  /// Sends `request` verbatim to the device's current address on port 80.
  HttpResult http_raw(Bytes request);

  /// SPI device -> UDP -> host bridge. Returns bytes the host received.
  Bytes spi_to_host(ByteView bytes);
  /// Host -> UDP -> device bridge -> SPI device output.
  Bytes host_to_spi(ByteView bytes);

  Ipv4Address device_ip() const { return device_.stack().config().ip; }
  SmartDevice& device() { return device_; }
  const SmartDevice& device() const { return device_; }
  HostClient& host() { return host_; }
  VirtualWire& wire() { return wire_; }
  const VirtualWire& wire() const { return wire_; }
  const TestbedOptions& options() const { return opts_; }

 private:
  bool step(std::int64_t limit_us);
  bool resolve(Ipv4Address ip, std::int64_t deadline_us);

  TestbedOptions opts_;
  std::int64_t now_us_ = 0;
  VirtualWire wire_;
  SmartDevice device_;
  HostClient host_;
};

}  // namespace embnet
