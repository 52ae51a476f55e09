// SPI <-> UDP bridge.
//
// SPI side: bytes from the attached SPI slave device collect in the SPI
// sending buffer and leave as one UDP datagram per flush. Ethernet side:
// datagrams arriving on the bridge port collect in the SPI receiving buffer
// and are drained to the SPI device. Payloads are passed through as-is.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "embnet/wire.hpp"

namespace embnet {

inline constexpr std::uint16_t kBridgeDevicePort = 5050;
inline constexpr std::uint16_t kBridgeHostPort = 5051;
/// Largest UDP payload that fits one unfragmented frame.
inline constexpr std::size_t kBridgeBufferCapacity = kMtu - kIpv4HeaderLen - kUdpHeaderLen;

struct BridgeConfig {
  std::uint16_t local_udp_port = kBridgeDevicePort;
  Ipv4Address peer_ip{{192, 168, 1, 11}};
  std::uint16_t peer_udp_port = kBridgeHostPort;
  std::size_t spi_tx_capacity = kBridgeBufferCapacity;
  std::size_t spi_rx_capacity = kBridgeBufferCapacity;
};

enum class BridgeErrc { BufferOverflow, SpiDisabled, BadConfig };

class BridgeError : public std::runtime_error {
 public:
  BridgeError(BridgeErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  BridgeErrc code() const { return code_; }

 private:
  BridgeErrc code_;
};

enum class UdpIngressResult { Accepted, WrongPort, BufferOverflow };

struct BridgeCounters {
  // SPI -> UDP
  std::uint64_t spi_bytes_in = 0;
  std::uint64_t udp_bytes_out = 0;
  std::uint64_t spi_bytes_rejected = 0;
  std::uint64_t datagrams_out = 0;
  // UDP -> SPI
  std::uint64_t udp_bytes_in = 0;
  std::uint64_t spi_bytes_out = 0;
  std::uint64_t udp_bytes_dropped = 0;
  std::uint64_t datagrams_dropped = 0;
};

class Bridge {
 public:
  /// Throws BridgeError{BadConfig} for zero ports or capacities.
  explicit Bridge(BridgeConfig cfg = {});

  /// SPI peripheral in slave mode and enabled. Ingress is refused otherwise.
  void set_spi_slave_enabled(bool on) { spi_enabled_ = on; }
  bool spi_slave_enabled() const { return spi_enabled_; }

  /// Buffers bytes from the SPI device. Returns a datagram when the buffer
  /// became exactly full (auto-flush). Rejects the whole ingress with
  /// BufferOverflow if it does not fit.
  std::optional<UdpDatagram> spi_ingress(ByteView bytes);
  /// Packages everything buffered; nullopt if the buffer is empty.
  std::optional<UdpDatagram> flush();

  /// Datagrams for other ports are left to the caller's drop path.
  UdpIngressResult udp_ingress(const UdpDatagram& dgram);
  /// Everything waiting for the SPI device, oldest first.
  Bytes drain_to_spi();

  const BridgeConfig& config() const { return cfg_; }
  void set_peer(Ipv4Address ip) { cfg_.peer_ip = ip; }
  std::size_t spi_tx_buffered() const { return spi_tx_.size(); }
  std::size_t spi_rx_buffered() const { return spi_rx_.size(); }
  const BridgeCounters& counters() const { return counters_; }

 private:
  UdpDatagram package();

  BridgeConfig cfg_;
  bool spi_enabled_ = true;
  Bytes spi_tx_;  // SPI sending buffer: SPI device -> network
  Bytes spi_rx_;  // SPI receiving buffer: network -> SPI device
  BridgeCounters counters_;
};

}  // namespace embnet
