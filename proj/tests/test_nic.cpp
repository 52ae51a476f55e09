#include <algorithm>
#include <deque>
#include <sstream>
#include <random>

#include "doctest.h"
#include "embnet/nic.hpp"
#include "support.hpp"

using namespace embnet;

namespace {

const MacAddress kMac{{0x02, 0, 0, 0, 0, 0x10}};
const MacAddress kOther{{0x02, 0, 0, 0, 0, 0x99}};

Bytes frame_to(const MacAddress& dst, std::size_t len, std::uint8_t fill) {
  Bytes f(len, fill);
  std::copy(dst.octets.begin(), dst.octets.end(), f.begin());
  return f;
}

// The ring invariants that must hold after any operation.
void check_invariants(const Nic& nic) {
  const auto& c = nic.counters();
  CHECK(c.rx_delivered == c.rx_read + nic.rx_ring().count() + c.rx_dropped);
  CHECK(nic.int_pending() == !nic.rx_ring().empty());
  CHECK(nic.rx_ring().used_bytes() <= nic.rx_ring().capacity_bytes());
}

}  // namespace

TEST_CASE("spi: encode/decode") {
  const SpiTransaction t{SpiOpcode::WriteFrame, Bytes{1, 2, 3}};
  const Bytes raw = encode(t);
  CHECK(raw == Bytes{0x03, 0x00, 0x03, 1, 2, 3});
  CHECK(decode_spi(raw) == t);

  try {
    decode_spi(Bytes{0x07, 0, 0});
    FAIL("bad opcode accepted");
  } catch (const NicError& e) {
    CHECK(e.code() == NicErrc::BadOpcode);
  }
  try {
    decode_spi(Bytes{0x03, 0, 5, 1});
    FAIL("length mismatch accepted");
  } catch (const NicError& e) {
    CHECK(e.code() == NicErrc::Malformed);
  }
}

TEST_CASE("nic: reset restores power-on state") {
  Nic nic(kMac);
  SpiEthernetDriver drv(nic);
  drv.set_mac(kOther);
  drv.set_promiscuous(true);
  nic.wire_deliver(frame_to(kOther, 60, 1));
  REQUIRE(nic.int_pending());
  drv.reset();
  CHECK(nic.rx_ring().empty());
  CHECK(nic.tx_ring().empty());
  CHECK_FALSE(nic.int_pending());
  CHECK_FALSE(nic.promiscuous());
  CHECK(nic.mac() == kMac);
}

TEST_CASE("nic: written frame reaches the medium unchanged") {
  Nic nic(kMac);
  std::vector<Bytes> seen;
  nic.attach_medium([&](Bytes f) { seen.push_back(std::move(f)); });
  SpiEthernetDriver drv(nic);
  const Bytes f = frame_to(kOther, 64, 0x5a);
  CHECK(drv.write_frame(f));
  REQUIRE(seen.size() == 1);
  CHECK(seen[0] == f);
  CHECK(nic.led_activity() == 1);

  nic.set_link(false);
  CHECK(drv.write_frame(f));
  CHECK(seen.size() == 1);
  CHECK(nic.counters().tx_link_down == 1);
}

TEST_CASE("nic: without a medium frames wait in the TX ring") {
  Nic nic(kMac);
  SpiEthernetDriver drv(nic);
  CHECK(drv.write_frame(frame_to(kOther, 60, 1)));
  CHECK(drv.write_frame(frame_to(kOther, 60, 2)));
  CHECK(nic.take_tx()->at(6) == 1);
  CHECK(nic.take_tx()->at(6) == 2);
  CHECK_FALSE(nic.take_tx());
  // 60 + 2 bytes per frame: 66 frames fit in 4096, the 67th does not.
  for (int i = 0; i < 66; ++i) REQUIRE(drv.write_frame(frame_to(kOther, 60, 0)));
  CHECK_FALSE(drv.write_frame(frame_to(kOther, 60, 0)));
  CHECK_THROWS_AS(nic.spi_execute({SpiOpcode::WriteFrame, Bytes(13, 0)}), NicError);
}

TEST_CASE("nic: two frames are read back in order") {
  Nic nic(kMac);
  SpiEthernetDriver drv(nic);
  const Bytes a = frame_to(kMac, 60, 0xa);
  const Bytes b = frame_to(kMac, 70, 0xb);
  CHECK(nic.wire_deliver(a) == DeliverResult::Accepted);
  CHECK(nic.wire_deliver(b) == DeliverResult::Accepted);
  const auto st = drv.read_status();
  CHECK(st.rx_count == 2);
  CHECK(st.int_pending);
  CHECK(st.link_up);
  CHECK(drv.read_frame() == a);
  CHECK(drv.read_frame() == b);
  CHECK_FALSE(drv.read_frame());
  CHECK_FALSE(nic.int_pending());
}

TEST_CASE("nic: MAC filter") {
  Nic nic(kMac);
  CHECK(nic.wire_deliver(frame_to(kOther, 60, 0)) == DeliverResult::Filtered);
  CHECK(nic.rx_ring().empty());
  CHECK(nic.wire_deliver(frame_to(MacAddress::broadcast(), 60, 0)) == DeliverResult::Accepted);
  SpiEthernetDriver(nic).set_promiscuous(true);
  CHECK(nic.wire_deliver(frame_to(kOther, 60, 0)) == DeliverResult::Accepted);
  CHECK(nic.wire_deliver(Bytes(10, 0xff)) == DeliverResult::Filtered);
  nic.set_link(false);
  CHECK(nic.wire_deliver(frame_to(kMac, 60, 0)) == DeliverResult::LinkDown);
  CHECK_FALSE(nic.led_link());
}

TEST_CASE("nic: overflow drops the newest frame") {
  Nic nic(kMac);
  // Each 1000-byte frame costs 1002 ring bytes; floor(4096 / 1002) = 4.
  const std::size_t fit = kNicRxCapacity / (1000 + kRingFrameOverhead);
  REQUIRE(fit == 4);
  for (std::size_t i = 0; i < fit; ++i) {
    CHECK(nic.wire_deliver(frame_to(kMac, 1000, static_cast<std::uint8_t>(i))) ==
          DeliverResult::Accepted);
  }
  CHECK(nic.wire_deliver(frame_to(kMac, 1000, 0xee)) == DeliverResult::Dropped);
  CHECK(nic.counters().rx_dropped == 1);
  REQUIRE(nic.rx_ring().count() == fit);
  for (std::size_t i = 0; i < fit; ++i) CHECK(nic.rx_ring().frames()[i][6] == i);
  check_invariants(nic);
}

TEST_CASE("nic: rx_count saturates in the status byte") {
  Nic nic(kMac, 1 << 20);
  for (int i = 0; i < 300; ++i) nic.wire_deliver(frame_to(kMac, 14, 0));
  CHECK(SpiEthernetDriver(nic).read_status().rx_count == 255);
  CHECK(nic.rx_ring().count() == 300);
}

TEST_CASE("nic: randomized batches keep FIFO order and conservation") {
  std::mt19937 rng(5);
  Nic nic(kMac);
  SpiEthernetDriver drv(nic);
  std::deque<Bytes> model;  // reference FIFO with the same byte budget
  std::size_t model_used = 0;
  std::uint32_t tag = 0;

  for (int round = 0; round < 400; ++round) {
    const int delivers = static_cast<int>(rng() % 6);
    for (int i = 0; i < delivers; ++i) {
      const std::size_t len = 14 + rng() % 1501;
      Bytes f = frame_to(rng() % 4 ? kMac : kOther, len, 0);
      for (int k = 0; k < 4 && 6 + k < static_cast<int>(len); ++k) f[6 + k] = static_cast<std::uint8_t>(tag >> (8 * k));
      ++tag;
      const auto r = nic.wire_deliver(f);
      const bool ours = std::equal(kMac.octets.begin(), kMac.octets.end(), f.begin());
      if (!ours) {
        CHECK(r == DeliverResult::Filtered);
      } else if (model_used + len + kRingFrameOverhead <= kNicRxCapacity) {
        CHECK(r == DeliverResult::Accepted);
        model.push_back(f);
        model_used += len + kRingFrameOverhead;
      } else {
        CHECK(r == DeliverResult::Dropped);
      }
      check_invariants(nic);
    }
    const int reads = static_cast<int>(rng() % 6);
    for (int i = 0; i < reads; ++i) {
      const auto got = drv.read_frame();
      if (model.empty()) {
        CHECK_FALSE(got);
      } else {
        REQUIRE(got);
        CHECK(*got == model.front());
        model_used -= model.front().size() + kRingFrameOverhead;
        model.pop_front();
      }
      check_invariants(nic);
    }
  }
}

TEST_CASE("nic: SPI trace lines") {
  Nic nic(kMac);
  std::ostringstream trace;
  nic.set_trace(&trace);
  SpiEthernetDriver(nic).read_status();
  CHECK(trace.str() == "spi 01 00 00\n");
}
