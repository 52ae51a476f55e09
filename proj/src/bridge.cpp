#include "embnet/bridge.hpp"

namespace embnet {

Bridge::Bridge(BridgeConfig cfg) : cfg_(cfg) {
  if (cfg_.local_udp_port == 0 || cfg_.peer_udp_port == 0) {
    throw BridgeError(BridgeErrc::BadConfig, "bridge ports must be nonzero");
  }
  if (cfg_.spi_tx_capacity == 0 || cfg_.spi_tx_capacity > kBridgeBufferCapacity ||
      cfg_.spi_rx_capacity == 0) {
    throw BridgeError(BridgeErrc::BadConfig, "bridge buffer capacity out of range");
  }
}

UdpDatagram Bridge::package() {
  UdpDatagram d;
  d.src_port = cfg_.local_udp_port;
  d.dst_port = cfg_.peer_udp_port;
  d.payload = std::move(spi_tx_);
  spi_tx_.clear();
  counters_.udp_bytes_out += d.payload.size();
  ++counters_.datagrams_out;
  return d;
}

std::optional<UdpDatagram> Bridge::spi_ingress(ByteView bytes) {
  if (!spi_enabled_) throw BridgeError(BridgeErrc::SpiDisabled, "SPI slave not enabled");
  if (bytes.size() > cfg_.spi_tx_capacity - spi_tx_.size()) {
    counters_.spi_bytes_rejected += bytes.size();
    throw BridgeError(BridgeErrc::BufferOverflow,
                      "SPI ingress of " + std::to_string(bytes.size()) + " bytes exceeds free " +
                          std::to_string(cfg_.spi_tx_capacity - spi_tx_.size()));
  }
  spi_tx_.insert(spi_tx_.end(), bytes.begin(), bytes.end());
  counters_.spi_bytes_in += bytes.size();
  if (spi_tx_.size() == cfg_.spi_tx_capacity) return package();
  return std::nullopt;
}

std::optional<UdpDatagram> Bridge::flush() {
  if (spi_tx_.empty()) return std::nullopt;
  return package();
}

UdpIngressResult Bridge::udp_ingress(const UdpDatagram& dgram) {
  if (dgram.dst_port != cfg_.local_udp_port) return UdpIngressResult::WrongPort;
  counters_.udp_bytes_in += dgram.payload.size();
  if (dgram.payload.size() > cfg_.spi_rx_capacity - spi_rx_.size()) {
    counters_.udp_bytes_dropped += dgram.payload.size();
    ++counters_.datagrams_dropped;
    return UdpIngressResult::BufferOverflow;
  }
  spi_rx_.insert(spi_rx_.end(), dgram.payload.begin(), dgram.payload.end());
  return UdpIngressResult::Accepted;
}

Bytes Bridge::drain_to_spi() {
  Bytes out = std::move(spi_rx_);
  spi_rx_.clear();
  counters_.spi_bytes_out += out.size();
  return out;
}

}  // namespace embnet
