// Single-connection TCP server machine.
//
// Enough TCP for one HTTP/1.0 exchange per connection on a lossless,
// ordered link: passive open, in-order delivery, segmented send honoring
// the peer window, and server-initiated close. No retransmission, no
// timers, no options. Out-of-order data is re-ACKed and discarded.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "embnet/wire.hpp"

namespace embnet {

inline constexpr std::size_t kTcpMss = 1460;
inline constexpr std::uint16_t kTcpRecvWindow = 2048;
inline constexpr std::uint16_t kHttpPort = 80;

enum class TcpState { Listen, SynRcvd, Established, FinWait1, FinWait2, LastAck, Closed };

const char* to_string(TcpState state);

enum class TcpErrc { ConnBusy, NotEstablished };

class TcpError : public std::runtime_error {
 public:
  TcpError(TcpErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  TcpErrc code() const { return code_; }

 private:
  TcpErrc code_;
};

struct TcpEndpoint {
  Ipv4Address ip;
  std::uint16_t port = 0;
  friend bool operator==(const TcpEndpoint&, const TcpEndpoint&) = default;
};

/// Sequence-space comparisons modulo 2^32.
inline bool seq_lt(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::int32_t>(a - b) < 0;
}
inline bool seq_le(std::uint32_t a, std::uint32_t b) { return !seq_lt(b, a); }

struct TcpConn {
  TcpState state = TcpState::Listen;
  std::uint16_t local_port = kHttpPort;
  std::optional<TcpEndpoint> remote;

  std::uint32_t iss = 0;
  std::uint32_t snd_una = 0;
  std::uint32_t snd_nxt = 0;
  std::uint32_t snd_wnd = 0;
  std::uint32_t irs = 0;
  std::uint32_t rcv_nxt = 0;

  Bytes rx_assembled;
  Bytes tx_pending;  // queued by the application, not yet sent
  bool close_after_send = false;
  bool fin_sent = false;
  bool peer_fin = false;

  /// ISS source; seeded at construction so traces are reproducible.
  std::mt19937 iss_gen;
  /// Completed connections (returned to Listen after a close handshake).
  std::uint64_t completed = 0;
  /// Connections abandoned because of a peer RST.
  std::uint64_t resets = 0;
};

TcpConn make_listener(std::uint16_t port, std::uint32_t iss_seed);

/// Segment addressed to a remote host.
struct OutSegment {
  Ipv4Address dst_ip;
  TcpSegment seg;
};

struct SegmentResult {
  std::vector<OutSegment> out;
  Bytes delivered;  // in-order payload appended to rx_assembled
  std::optional<TcpErrc> error;
};

/// Processes one inbound segment from `src_ip`.
SegmentResult on_segment(TcpConn& conn, Ipv4Address src_ip, const TcpSegment& seg);

/// Queues `data`; with `then_close`, a FIN follows once everything sent has
/// been acknowledged. Throws TcpError{NotEstablished}.
std::vector<OutSegment> app_send(TcpConn& conn, ByteView data, bool then_close);

/// Shorthand for app_send(conn, {}, true).
std::vector<OutSegment> app_close(TcpConn& conn);

/// RST answering `seg` (which must not itself carry RST).
TcpSegment make_reset_for(const TcpSegment& seg);

}  // namespace embnet
