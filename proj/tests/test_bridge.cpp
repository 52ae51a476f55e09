#include <random>

#include "doctest.h"
#include "embnet/bridge.hpp"
#include "support.hpp"

using namespace embnet;

namespace {

void check_conservation(const Bridge& b) {
  const auto& c = b.counters();
  CHECK(c.spi_bytes_in == c.udp_bytes_out + b.spi_tx_buffered());
  CHECK(c.udp_bytes_in == c.spi_bytes_out + b.spi_rx_buffered() + c.udp_bytes_dropped);
}

BridgeConfig mirrored() {
  BridgeConfig cfg;
  cfg.local_udp_port = kBridgeHostPort;
  cfg.peer_udp_port = kBridgeDevicePort;
  return cfg;
}

}  // namespace

TEST_CASE("bridge: capacity is one unfragmented UDP payload") {
  CHECK(kBridgeBufferCapacity == 1500 - 20 - 8);
}

TEST_CASE("bridge: flush packages the buffered bytes") {
  Bridge b;
  CHECK_FALSE(b.spi_ingress(Bytes(10, 7)));
  const auto d = b.flush();
  REQUIRE(d);
  CHECK(d->payload == Bytes(10, 7));
  CHECK(d->src_port == kBridgeDevicePort);
  CHECK(d->dst_port == kBridgeHostPort);
  CHECK_FALSE(b.flush());

  b.spi_ingress(to_bytes("abcde"));
  b.spi_ingress(to_bytes("fghij"));
  CHECK(b.flush()->payload == to_bytes("abcdefghij"));
  check_conservation(b);
}

TEST_CASE("bridge: overflow and auto-flush") {
  Bridge b;
  try {
    b.spi_ingress(Bytes(1473, 0));
    FAIL("oversized ingress accepted");
  } catch (const BridgeError& e) {
    CHECK(e.code() == BridgeErrc::BufferOverflow);
  }
  CHECK(b.spi_tx_buffered() == 0);
  CHECK(b.counters().spi_bytes_rejected == 1473);

  CHECK_FALSE(b.spi_ingress(Bytes(1000, 1)));
  const auto full = b.spi_ingress(Bytes(472, 2));
  REQUIRE(full);
  CHECK(full->payload.size() == 1472);
  CHECK(b.spi_tx_buffered() == 0);

  b.set_spi_slave_enabled(false);
  CHECK_THROWS_AS(b.spi_ingress(Bytes(1, 0)), BridgeError);
  check_conservation(b);
}

TEST_CASE("bridge: UDP side") {
  Bridge b;
  CHECK(b.udp_ingress(UdpDatagram{5051, kBridgeDevicePort, to_bytes("abc")}) ==
        UdpIngressResult::Accepted);
  CHECK(b.drain_to_spi() == to_bytes("abc"));
  CHECK(b.udp_ingress(UdpDatagram{5051, 9999, to_bytes("abc")}) == UdpIngressResult::WrongPort);
  CHECK(b.udp_ingress(UdpDatagram{5051, kBridgeDevicePort, Bytes(1472, 0)}) ==
        UdpIngressResult::Accepted);
  CHECK(b.udp_ingress(UdpDatagram{5051, kBridgeDevicePort, Bytes(1, 0)}) ==
        UdpIngressResult::BufferOverflow);
  check_conservation(b);
  CHECK_THROWS_AS(Bridge(BridgeConfig{0}), BridgeError);
}

TEST_CASE("bridge: loopback through a mirrored bridge") {
  std::mt19937 rng(31);
  Bridge dev;
  Bridge host(mirrored());
  for (int i = 0; i < 300; ++i) {
    const Bytes x = testsupport::random_bytes(rng, rng() % (kBridgeBufferCapacity + 1));
    auto d = dev.spi_ingress(x);
    if (!d) d = dev.flush();
    if (x.empty()) {
      CHECK_FALSE(d);
      continue;
    }
    REQUIRE(d);
    CHECK(host.udp_ingress(*d) == UdpIngressResult::Accepted);
    CHECK(host.drain_to_spi() == x);
  }
  check_conservation(dev);
  check_conservation(host);
}
