#include "embnet/tcp.hpp"

#include <algorithm>

namespace embnet {

using namespace tcp_flags;

const char* to_string(TcpState state) {
  switch (state) {
    case TcpState::Listen: return "Listen";
    case TcpState::SynRcvd: return "SynRcvd";
    case TcpState::Established: return "Established";
    case TcpState::FinWait1: return "FinWait1";
    case TcpState::FinWait2: return "FinWait2";
    case TcpState::LastAck: return "LastAck";
    case TcpState::Closed: return "Closed";
  }
  return "?";
}

TcpConn make_listener(std::uint16_t port, std::uint32_t iss_seed) {
  TcpConn c;
  c.local_port = port;
  c.iss_gen.seed(iss_seed);
  return c;
}

TcpSegment make_reset_for(const TcpSegment& seg) {
  TcpSegment r;
  r.src_port = seg.dst_port;
  r.dst_port = seg.src_port;
  if (seg.flags & kAck) {
    r.seq = seg.ack;
    r.flags = kRst;
  } else {
    r.seq = 0;
    r.ack = seg.seq + seg.seq_len();
    r.flags = kRst | kAck;
  }
  return r;
}

namespace {

void rearm(TcpConn& c) {
  c.state = TcpState::Listen;
  c.remote.reset();
  c.iss = c.snd_una = c.snd_nxt = c.snd_wnd = 0;
  c.irs = c.rcv_nxt = 0;
  c.rx_assembled.clear();
  c.tx_pending.clear();
  c.close_after_send = false;
  c.fin_sent = false;
  c.peer_fin = false;
}

OutSegment make_out(const TcpConn& c, std::uint8_t flags, Bytes payload = {}) {
  TcpSegment s;
  s.src_port = c.local_port;
  s.dst_port = c.remote->port;
  s.seq = c.snd_nxt;
  s.ack = (flags & kAck) ? c.rcv_nxt : 0;
  s.flags = flags;
  s.window = kTcpRecvWindow;
  s.payload = std::move(payload);
  return OutSegment{c.remote->ip, std::move(s)};
}

/// Sends queued data within the peer window, then the FIN when due.
/// Returns true if anything carrying an ACK was emitted.
bool pump(TcpConn& c, std::vector<OutSegment>& out) {
  bool emitted = false;
  if (c.state != TcpState::Established || c.fin_sent) return false;

  while (!c.tx_pending.empty()) {
    const std::uint32_t in_flight = c.snd_nxt - c.snd_una;
    if (in_flight >= c.snd_wnd) break;
    const std::size_t n = std::min<std::size_t>({kTcpMss, c.tx_pending.size(),
                                                 std::size_t{c.snd_wnd - in_flight}});
    Bytes chunk(c.tx_pending.begin(), c.tx_pending.begin() + static_cast<std::ptrdiff_t>(n));
    c.tx_pending.erase(c.tx_pending.begin(), c.tx_pending.begin() + static_cast<std::ptrdiff_t>(n));
    const std::uint8_t flags = c.tx_pending.empty() ? (kPsh | kAck) : kAck;
    out.push_back(make_out(c, flags, std::move(chunk)));
    c.snd_nxt += static_cast<std::uint32_t>(n);
    emitted = true;
  }

  if (c.close_after_send && c.tx_pending.empty() && c.snd_una == c.snd_nxt) {
    out.push_back(make_out(c, kFin | kAck));
    c.snd_nxt += 1;
    c.fin_sent = true;
    c.state = c.peer_fin ? TcpState::LastAck : TcpState::FinWait1;
    emitted = true;
  }
  return emitted;
}

void finish(TcpConn& c) {
  c.state = TcpState::Closed;
  ++c.completed;
  rearm(c);
}

}  // namespace

SegmentResult on_segment(TcpConn& c, Ipv4Address src_ip, const TcpSegment& seg) {
  SegmentResult r;
  auto reply_rst = [&] {
    if (!(seg.flags & kRst)) r.out.push_back(OutSegment{src_ip, make_reset_for(seg)});
  };

  if (seg.dst_port != c.local_port || c.state == TcpState::Closed) {
    reply_rst();
    return r;
  }

  if (c.state == TcpState::Listen) {
    if (seg.flags & kRst) return r;
    if (seg.flags & kAck) {
      reply_rst();
      return r;
    }
    if (!(seg.flags & kSyn)) return r;
    c.remote = TcpEndpoint{src_ip, seg.src_port};
    c.irs = seg.seq;
    c.rcv_nxt = seg.seq + 1;
    c.iss = static_cast<std::uint32_t>(c.iss_gen());
    c.snd_una = c.iss;
    c.snd_nxt = c.iss;
    c.snd_wnd = seg.window;
    c.state = TcpState::SynRcvd;
    r.out.push_back(make_out(c, kSyn | kAck));
    c.snd_nxt += 1;
    return r;
  }

  if (!(c.remote == TcpEndpoint{src_ip, seg.src_port})) {
    if ((seg.flags & kSyn) && !(seg.flags & kAck)) r.error = TcpErrc::ConnBusy;
    reply_rst();
    return r;
  }

  if (seg.flags & kRst) {
    // Accept only resets that land inside the receive window.
    const bool in_window =
        seq_le(c.rcv_nxt, seg.seq) && seq_lt(seg.seq, c.rcv_nxt + kTcpRecvWindow);
    if (in_window || c.state == TcpState::SynRcvd) {
      ++c.resets;
      rearm(c);
    }
    return r;
  }

  if (c.state == TcpState::SynRcvd) {
    if ((seg.flags & kSyn) && !(seg.flags & kAck) && seg.seq == c.irs) {
      // Retransmitted SYN: repeat the SYN|ACK.
      c.snd_nxt = c.iss;
      r.out.push_back(make_out(c, kSyn | kAck));
      c.snd_nxt += 1;
      return r;
    }
    if (!(seg.flags & kAck)) return r;
    if (seg.ack != c.iss + 1) {
      reply_rst();
      return r;
    }
    c.snd_una = seg.ack;
    c.snd_wnd = seg.window;
    c.state = TcpState::Established;
  }

  if (seg.flags & kSyn) {
    // SYN on a synchronized connection: answer with a bare ACK.
    r.out.push_back(make_out(c, kAck));
    return r;
  }

  if (seg.flags & kAck) {
    if (seq_lt(c.snd_una, seg.ack) && seq_le(seg.ack, c.snd_nxt)) c.snd_una = seg.ack;
    if (seq_le(c.snd_una, seg.ack)) c.snd_wnd = seg.window;
  }

  bool need_ack = false;
  const bool accepts_data = c.state == TcpState::Established ||
                            c.state == TcpState::FinWait1 || c.state == TcpState::FinWait2;
  if (!seg.payload.empty() || (seg.flags & kFin)) {
    if (seg.seq == c.rcv_nxt && !c.peer_fin) {
      if (!seg.payload.empty() && accepts_data) {
        c.rx_assembled.insert(c.rx_assembled.end(), seg.payload.begin(), seg.payload.end());
        r.delivered = seg.payload;
        c.rcv_nxt += static_cast<std::uint32_t>(seg.payload.size());
      }
      if ((seg.flags & kFin) && (seg.payload.empty() || accepts_data)) {
        c.rcv_nxt += 1;
        c.peer_fin = true;
      }
    }
    // In-order data is acknowledged; anything else is re-ACKed at rcv_nxt.
    need_ack = true;
  }

  const bool fin_acked = c.fin_sent && c.snd_una == c.snd_nxt;
  switch (c.state) {
    case TcpState::Established:
      if (pump(c, r.out)) need_ack = false;
      break;
    case TcpState::FinWait1:
      if (fin_acked) c.state = TcpState::FinWait2;
      break;
    case TcpState::LastAck:
      if (fin_acked) {
        finish(c);
        return r;
      }
      break;
    default:
      break;
  }

  if (need_ack) r.out.push_back(make_out(c, kAck));
  if (c.state == TcpState::FinWait2 && c.peer_fin) finish(c);
  return r;
}

std::vector<OutSegment> app_send(TcpConn& c, ByteView data, bool then_close) {
  if (c.state != TcpState::Established || c.fin_sent) {
    throw TcpError(TcpErrc::NotEstablished,
                   std::string("app_send in state ") + to_string(c.state));
  }
  c.tx_pending.insert(c.tx_pending.end(), data.begin(), data.end());
  if (then_close) c.close_after_send = true;
  std::vector<OutSegment> out;
  pump(c, out);
  return out;
}

std::vector<OutSegment> app_close(TcpConn& c) { return app_send(c, {}, true); }

}  // namespace embnet
