#include "embnet/nic.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

namespace embnet {

const char* to_string(NicErrc code) {
  switch (code) {
    case NicErrc::RxEmpty: return "RxEmpty";
    case NicErrc::TxOverflow: return "TxOverflow";
    case NicErrc::BadOpcode: return "BadOpcode";
    case NicErrc::Malformed: return "Malformed";
  }
  return "?";
}

Bytes encode(const SpiTransaction& txn) {
  if (txn.payload.size() > 0xffff) {
    throw NicError(NicErrc::Malformed, "spi payload longer than 65535 bytes");
  }
  Bytes out;
  out.reserve(3 + txn.payload.size());
  out.push_back(static_cast<std::uint8_t>(txn.opcode));
  put_u16(out, static_cast<std::uint16_t>(txn.payload.size()));
  out.insert(out.end(), txn.payload.begin(), txn.payload.end());
  return out;
}

SpiTransaction decode_spi(ByteView raw) {
  if (raw.size() < 3) throw NicError(NicErrc::Malformed, "spi: short command header");
  const std::uint8_t op = raw[0];
  if (op < static_cast<std::uint8_t>(SpiOpcode::ReadStatus) ||
      op > static_cast<std::uint8_t>(SpiOpcode::Reset)) {
    throw NicError(NicErrc::BadOpcode, "spi: bad opcode " + std::to_string(op));
  }
  const std::size_t len = get_u16(raw, 1);
  if (raw.size() != 3 + len) {
    throw NicError(NicErrc::Malformed, "spi: length field " + std::to_string(len) +
                                           " does not match payload " +
                                           std::to_string(raw.size() - 3));
  }
  return SpiTransaction{static_cast<SpiOpcode>(op), Bytes(raw.begin() + 3, raw.end())};
}

bool FrameRing::push(Bytes frame) {
  if (!fits(frame.size())) return false;
  used_ += frame.size() + kRingFrameOverhead;
  frames_.push_back(std::move(frame));
  return true;
}

std::optional<Bytes> FrameRing::pop() {
  if (frames_.empty()) return std::nullopt;
  Bytes f = std::move(frames_.front());
  frames_.pop_front();
  used_ -= f.size() + kRingFrameOverhead;
  return f;
}

Nic::Nic(MacAddress factory_mac, std::size_t rx_capacity, std::size_t tx_capacity)
    : factory_mac_(factory_mac), mac_(factory_mac), rx_(rx_capacity), tx_(tx_capacity) {}

void Nic::reset() {
  mac_ = factory_mac_;
  rx_.clear();
  tx_.clear();
  int_pending_ = false;
  promiscuous_ = false;
  led_activity_ = 0;
  counters_ = {};
}

bool Nic::accepts(const MacAddress& dst) const {
  return promiscuous_ || dst == mac_ || dst.is_broadcast();
}

Bytes Nic::spi_transfer(ByteView raw) { return spi_execute(decode_spi(raw)); }

Bytes Nic::spi_execute(const SpiTransaction& txn) {
  if (trace_) {
    *trace_ << "spi";
    for (std::uint8_t b : encode(txn)) {
      char hex[4];
      std::snprintf(hex, sizeof hex, " %02x", b);
      *trace_ << hex;
    }
    *trace_ << '\n';
  }

  switch (txn.opcode) {
    case SpiOpcode::ReadStatus: {
      const auto count = static_cast<std::uint8_t>(std::min<std::size_t>(rx_.count(), 0xff));
      return Bytes{static_cast<std::uint8_t>(link_up_), count,
                   static_cast<std::uint8_t>(int_pending_)};
    }
    case SpiOpcode::ReadFrame: {
      auto frame = rx_.pop();
      if (!frame) throw NicError(NicErrc::RxEmpty, "spi: read from empty rx ring");
      ++counters_.rx_read;
      int_pending_ = !rx_.empty();
      return std::move(*frame);
    }
    case SpiOpcode::WriteFrame: {
      if (txn.payload.size() < kEthHeaderLen || txn.payload.size() > kMaxFrameLen) {
        throw NicError(NicErrc::Malformed,
                       "spi: frame length " + std::to_string(txn.payload.size()));
      }
      if (!tx_.push(txn.payload)) {
        throw NicError(NicErrc::TxOverflow, "spi: tx ring full");
      }
      ++counters_.tx_written;
      ++led_activity_;
      if (medium_) {
        while (auto frame = tx_.pop()) {
          if (link_up_) {
            ++counters_.tx_sent;
            medium_(std::move(*frame));
          } else {
            ++counters_.tx_link_down;
          }
        }
      }
      return {};
    }
    case SpiOpcode::SetMac: {
      if (txn.payload.size() != 6) throw NicError(NicErrc::Malformed, "spi: SetMac needs 6 bytes");
      std::copy(txn.payload.begin(), txn.payload.end(), mac_.octets.begin());
      return {};
    }
    case SpiOpcode::SetPromiscuous: {
      if (txn.payload.size() != 1) {
        throw NicError(NicErrc::Malformed, "spi: SetPromiscuous needs 1 byte");
      }
      promiscuous_ = txn.payload[0] != 0;
      return {};
    }
    case SpiOpcode::Reset:
      reset();
      return {};
  }
  throw NicError(NicErrc::BadOpcode, "spi: bad opcode");
}

DeliverResult Nic::wire_deliver(ByteView frame) {
  if (!link_up_) {
    ++counters_.rx_link_down;
    return DeliverResult::LinkDown;
  }
  if (frame.size() < kEthHeaderLen || frame.size() > kMaxFrameLen) {
    ++counters_.rx_filtered;
    return DeliverResult::Filtered;
  }
  MacAddress dst;
  std::copy_n(frame.begin(), 6, dst.octets.begin());
  if (!accepts(dst)) {
    ++counters_.rx_filtered;
    return DeliverResult::Filtered;
  }
  ++counters_.rx_delivered;
  if (!rx_.push(Bytes(frame.begin(), frame.end()))) {
    ++counters_.rx_dropped;
    return DeliverResult::Dropped;
  }
  ++led_activity_;
  int_pending_ = true;
  return DeliverResult::Accepted;
}

std::optional<Bytes> Nic::take_tx() {
  auto frame = tx_.pop();
  if (frame) ++counters_.tx_sent;
  return frame;
}

void Nic::set_link(bool up) {
  link_up_ = up;
  led_link_ = up;
}

// ---------------------------------------------------------------------------

Bytes SpiEthernetDriver::transfer(SpiOpcode op, Bytes payload) {
  return nic_->spi_transfer(encode(SpiTransaction{op, std::move(payload)}));
}

SpiEthernetDriver::Status SpiEthernetDriver::read_status() {
  const Bytes r = transfer(SpiOpcode::ReadStatus);
  return Status{r.at(0) != 0, r.at(1), r.at(2) != 0};
}

std::optional<Bytes> SpiEthernetDriver::read_frame() {
  try {
    return transfer(SpiOpcode::ReadFrame);
  } catch (const NicError& e) {
    if (e.code() == NicErrc::RxEmpty) return std::nullopt;
    throw;
  }
}

bool SpiEthernetDriver::write_frame(ByteView frame) {
  try {
    transfer(SpiOpcode::WriteFrame, Bytes(frame.begin(), frame.end()));
    return true;
  } catch (const NicError& e) {
    if (e.code() == NicErrc::TxOverflow) return false;
    throw;
  }
}

void SpiEthernetDriver::set_mac(const MacAddress& mac) {
  transfer(SpiOpcode::SetMac, Bytes(mac.octets.begin(), mac.octets.end()));
}

void SpiEthernetDriver::set_promiscuous(bool on) {
  transfer(SpiOpcode::SetPromiscuous, Bytes{static_cast<std::uint8_t>(on)});
}

void SpiEthernetDriver::reset() { transfer(SpiOpcode::Reset); }

}  // namespace embnet
