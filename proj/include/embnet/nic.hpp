// Simulated SPI-attached standalone Ethernet controller.
//
// The host MCU talks to the controller only through SPI transactions framed
// as [opcode:1][length:2 big-endian][payload]. The virtual cable talks to it
// through wire_deliver() (inbound) and take_tx() (outbound).

#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "embnet/wire.hpp"

namespace embnet {

/// Documentation only; SPI timing is not simulated.
inline constexpr std::uint32_t kSpiMaxClockHz = 20'000'000;
inline constexpr std::size_t kNicRxCapacity = 4096;
inline constexpr std::size_t kNicTxCapacity = 4096;
/// Bytes of ring storage consumed per frame in addition to its contents.
inline constexpr std::size_t kRingFrameOverhead = 2;
inline constexpr std::size_t kMaxFrameLen = kEthHeaderLen + kMtu;

enum class SpiOpcode : std::uint8_t {
  ReadStatus = 0x01,
  ReadFrame = 0x02,
  WriteFrame = 0x03,
  SetMac = 0x04,
  SetPromiscuous = 0x05,
  Reset = 0x06,
};

struct SpiTransaction {
  SpiOpcode opcode = SpiOpcode::ReadStatus;
  Bytes payload;

  friend bool operator==(const SpiTransaction&, const SpiTransaction&) = default;
};

enum class NicErrc { RxEmpty, TxOverflow, BadOpcode, Malformed };

const char* to_string(NicErrc code);

class NicError : public std::runtime_error {
 public:
  NicError(NicErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  NicErrc code() const { return code_; }

 private:
  NicErrc code_;
};

Bytes encode(const SpiTransaction& txn);
/// Throws NicError{BadOpcode} or NicError{Malformed} (length mismatch).
SpiTransaction decode_spi(ByteView raw);

/// Bounded FIFO of frames, sized in bytes. Each frame costs its length
/// plus a 2-byte length prefix.
class FrameRing {
 public:
  explicit FrameRing(std::size_t capacity_bytes) : capacity_(capacity_bytes) {}

  bool fits(std::size_t frame_len) const {
    return used_ + frame_len + kRingFrameOverhead <= capacity_;
  }
  bool push(Bytes frame);
  std::optional<Bytes> pop();
  void clear() {
    frames_.clear();
    used_ = 0;
  }

  bool empty() const { return frames_.empty(); }
  std::size_t count() const { return frames_.size(); }
  std::size_t used_bytes() const { return used_; }
  std::size_t capacity_bytes() const { return capacity_; }
  const std::deque<Bytes>& frames() const { return frames_; }

 private:
  std::size_t capacity_;
  std::size_t used_ = 0;
  std::deque<Bytes> frames_;
};

enum class DeliverResult { Accepted, Filtered, Dropped, LinkDown };

struct NicCounters {
  std::uint64_t rx_delivered = 0;  // passed the MAC filter
  std::uint64_t rx_read = 0;
  std::uint64_t rx_dropped = 0;    // ring overflow
  std::uint64_t rx_filtered = 0;
  std::uint64_t rx_link_down = 0;
  std::uint64_t tx_written = 0;
  std::uint64_t tx_sent = 0;
  std::uint64_t tx_link_down = 0;

  friend bool operator==(const NicCounters&, const NicCounters&) = default;
};

class Nic {
 public:
  explicit Nic(MacAddress factory_mac, std::size_t rx_capacity = kNicRxCapacity,
               std::size_t tx_capacity = kNicTxCapacity);

  /// Executes one decoded transaction and returns the response bytes
  /// (empty for write-style commands).
  Bytes spi_execute(const SpiTransaction& txn);
  /// Raw byte-level entry point: decode, then execute.
  Bytes spi_transfer(ByteView raw);

  DeliverResult wire_deliver(ByteView frame);
  /// Next frame leaving through the cable, oldest first.
  std::optional<Bytes> take_tx();
  /// With a medium attached, written frames leave immediately instead of
  /// waiting for take_tx(); while the link is down they are lost.
  void attach_medium(std::function<void(Bytes)> medium) { medium_ = std::move(medium); }

  void set_link(bool up);
  /// Every SPI transaction is appended to `out` as one hex line; nullptr
  /// disables tracing.
  void set_trace(std::ostream* out) { trace_ = out; }

  const MacAddress& mac() const { return mac_; }
  bool int_pending() const { return int_pending_; }
  bool link_up() const { return link_up_; }
  bool led_link() const { return led_link_; }
  std::uint64_t led_activity() const { return led_activity_; }
  bool promiscuous() const { return promiscuous_; }
  const FrameRing& rx_ring() const { return rx_; }
  const FrameRing& tx_ring() const { return tx_; }
  const NicCounters& counters() const { return counters_; }

 private:
  void reset();
  bool accepts(const MacAddress& dst) const;

  MacAddress factory_mac_;
  MacAddress mac_;
  FrameRing rx_;
  FrameRing tx_;
  bool int_pending_ = false;
  bool link_up_ = true;
  bool led_link_ = true;
  std::uint64_t led_activity_ = 0;
  bool promiscuous_ = false;
  NicCounters counters_;
  std::ostream* trace_ = nullptr;
  std::function<void(Bytes)> medium_;
};

/// Host-MCU side of the SPI link: what the network stack calls to move
/// frames in and out of the controller.
class SpiEthernetDriver {
 public:
  struct Status {
    bool link_up = false;
    std::uint8_t rx_count = 0;
    bool int_pending = false;
  };

  explicit SpiEthernetDriver(Nic& nic) : nic_(&nic) {}

  Status read_status();
  std::optional<Bytes> read_frame();
  /// False when the controller reports TxOverflow.
  bool write_frame(ByteView frame);
  void set_mac(const MacAddress& mac);
  void set_promiscuous(bool on);
  void reset();

 private:
  Bytes transfer(SpiOpcode op, Bytes payload = {});

  Nic* nic_;
};

}  // namespace embnet
