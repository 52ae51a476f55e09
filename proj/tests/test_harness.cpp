#include <algorithm>

#include "doctest.h"
#include "embnet/harness.hpp"
#include "support.hpp"

using namespace embnet;

namespace {

const Ipv4Address kDev{{192, 168, 1, 10}};

// Parses every layer the system can emit; throws on anything malformed.
void parse_fully(const Bytes& raw) {
  const EthernetFrame f = parse_frame(raw);
  if (f.ethertype == static_cast<std::uint16_t>(EtherType::Arp)) {
    parse_arp(f.payload);
    return;
  }
  REQUIRE(f.ethertype == static_cast<std::uint16_t>(EtherType::Ipv4));
  const Ipv4Packet ip = parse_ipv4(f.payload);
  switch (static_cast<IpProto>(ip.protocol)) {
    case IpProto::Icmp: parse_icmp_echo(ip.payload); break;
    case IpProto::Udp: parse_udp(ip.payload, ip.src, ip.dst); break;
    case IpProto::Tcp: parse_tcp(ip.payload, ip.src, ip.dst); break;
    default: FAIL("unexpected protocol");
  }
}

TestbedOptions with_seed(std::uint64_t seed) {
  TestbedOptions o;
  o.wire.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("wire: per-direction order, exactly-once, latency range") {
  VirtualWire w(WireOptions{5, 0.0, 1, 3});
  for (int i = 0; i < 200; ++i) {
    w.send(Direction::HostToDevice, Bytes{static_cast<std::uint8_t>(i)}, i * 100);
    w.send(Direction::DeviceToHost, Bytes{static_cast<std::uint8_t>(i)}, i * 100);
  }
  std::vector<int> seen[2];
  std::int64_t last = 0;
  while (auto t = w.next_delivery()) {
    CHECK(*t >= last);
    last = *t;
    for (auto& d : w.take_due(*t)) seen[static_cast<int>(d.dir)].push_back(d.frame[0]);
  }
  for (auto& s : seen) {
    REQUIRE(s.size() == 200);
    for (int i = 0; i < 200; ++i) CHECK(s[static_cast<std::size_t>(i)] == (i & 0xff));
  }
  CHECK(w.idle());
  CHECK(w.capture().size() == 400);

  // A lone frame takes 1..3 ms.
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    VirtualWire one(WireOptions{seed});
    one.send(Direction::HostToDevice, Bytes{1}, 0);
    const auto t = *one.next_delivery();
    CHECK(t >= 1000);
    CHECK(t <= 3000);
    CHECK(t % 1000 == 0);
  }

  CHECK_THROWS_AS(VirtualWire(WireOptions{1, 1.5}), std::invalid_argument);
  CHECK_THROWS_AS(VirtualWire(WireOptions{1, 0.0, 3, 1}), std::invalid_argument);
}

TEST_CASE("wire: identical seeds give identical schedules") {
  auto schedule = [](std::uint64_t seed) {
    VirtualWire w(WireOptions{seed, 0.2});
    std::vector<std::int64_t> times;
    for (int i = 0; i < 100; ++i) w.send(Direction::HostToDevice, Bytes{1}, i * 10);
    while (auto t = w.next_delivery()) {
      times.push_back(*t);
      w.take_due(*t);
    }
    return times;
  };
  CHECK(schedule(3) == schedule(3));
  CHECK(schedule(3) != schedule(4));
  CHECK(schedule(3).size() < 100);
}

TEST_CASE("pcap: header and records") {
  std::vector<CapturedFrame> frames{{1'500'000, Direction::HostToDevice, Bytes(60, 0xaa), false},
                                    {2'000'001, Direction::DeviceToHost, Bytes(42, 0xbb), false}};
  const Bytes p = encode_pcap(frames);
  CHECK(Bytes(p.begin(), p.begin() + 4) == testsupport::hex("d4c3b2a1"));
  CHECK(p[4] == 2);
  CHECK(p[6] == 4);
  CHECK(p[20] == 1);  // Ethernet
  CHECK(p.size() == 24 + 16 + 60 + 16 + 42);
  // First record: ts 1 s + 500000 us, 60 bytes.
  CHECK(Bytes(p.begin() + 24, p.begin() + 40) ==
        testsupport::hex("01000000 20a10700 3c000000 3c000000"));
}

TEST_CASE("ping report format") {
  const std::vector<PingResult> r{{true, 32, 2, 128}, {false, 0, 0, 0}};
  CHECK(format_ping_report(r, kDev, 32) ==
        "Pinging 192.168.1.10 with 32 bytes of data:\n"
        "Reply from 192.168.1.10: bytes=32 time=2ms TTL=128\n"
        "Request timed out.\n");
  CHECK(format_ping_report({}, kDev, 32) == "Pinging 192.168.1.10 with 32 bytes of data:\n");
}

TEST_CASE("testbed: ping") {
  Testbed bed;
  const auto r = bed.ping(kDev, 4, 32);
  REQUIRE(r.size() == 4);
  for (const auto& p : r) {
    CHECK(p.reply);
    CHECK(p.bytes == 32);
    CHECK(p.ttl == 128);
    CHECK(p.time_ms >= 2);
    CHECK(p.time_ms <= 6);
  }

  Testbed down;
  down.set_link(false);
  const auto t = down.ping(kDev, 4, 32);
  CHECK(std::none_of(t.begin(), t.end(), [](const PingResult& p) { return p.reply; }));

  auto times = [](std::uint64_t seed) {
    Testbed b(with_seed(seed));
    std::vector<std::int64_t> out;
    for (const auto& p : b.ping(kDev, 8, 32)) out.push_back(p.time_ms);
    return out;
  };
  CHECK(times(12) == times(12));
}

TEST_CASE("testbed: GET /") {
  Testbed bed;
  const HttpResult r = bed.http_get("/");
  REQUIRE_FALSE(r.error);
  CHECK(r.status == 200);
  REQUIRE(r.headers.size() == 1);
  CHECK(r.headers[0] == std::pair<std::string, std::string>{"Content-Type", "text/html"});
  CHECK(r.body.find("AVR Webservice") != std::string::npos);
  CHECK(r.server_fin);
  CHECK(bed.device().stack().tcp().state == TcpState::Listen);
  CHECK(bed.device().stack().tcp().completed == 1);
}

TEST_CASE("testbed: LED 2 command then refresh") {
  Testbed bed;
  bed.http_get("/?l2=1");
  const HttpResult r = bed.http_get("/");
  CHECK(r.body.find("LED 2 : <font color=green>ON</font>") != std::string::npos);
  CHECK(r.body.find("Request# 002") != std::string::npos);
}

TEST_CASE("testbed: GET with the link down times out") {
  Testbed bed;
  bed.set_link(false);
  const HttpResult r = bed.http_get("/");
  CHECK(r.error == HarnessErrc::Timeout);
  bed.set_link(true);
  CHECK(bed.http_get("/").status == 200);
}

TEST_CASE("testbed: address change takes effect after the page") {
  Testbed bed;
  const HttpResult r = bed.http_get("/?aip=192.168.1.20");
  CHECK(r.status == 200);
  CHECK(r.body.find("value=\"192.168.1.20\"") != std::string::npos);
  CHECK(bed.device_ip() == Ipv4Address{{192, 168, 1, 20}});
  const auto old = bed.ping(kDev, 1, 32);
  CHECK_FALSE(old[0].reply);
  CHECK(bed.ping(Ipv4Address{{192, 168, 1, 20}}, 1, 32)[0].reply);
  CHECK(bed.http_get("/").status == 200);
}

TEST_CASE("testbed: post-form template") {
  TestbedOptions o;
  o.device.page = PageTemplate::PostForm;
  Testbed bed(o);
  HttpResult r = bed.http_get("/");
  CHECK(r.body.find("<h1>Embedded Web Server</h1>") != std::string::npos);
  CHECK(r.body.find("value=\"0\" checked>Blinking LED") != std::string::npos);
  r = bed.http_post("/", "radio=1");
  CHECK(r.body.find("value=\"1\" checked>Scanning LED") != std::string::npos);
  CHECK(bed.device().state().led_mode == LedMode::Scanning);
}

TEST_CASE("testbed: long request spans several segments") {
  Testbed bed;
  std::string pad(3000, 'p');
  const HttpResult r = bed.http_raw(to_bytes("GET /?l1=1 HTTP/1.0\r\nX-Pad: " + pad + "\r\n\r\n"));
  CHECK(r.status == 200);
  CHECK(bed.device().state().led1);
}

TEST_CASE("testbed: oversized request gets 400") {
  Testbed bed;
  const HttpResult r = bed.http_raw(to_bytes("GET /?" + std::string(5000, 'a')));
  CHECK(r.status == 400);
  CHECK(r.server_fin);
}

TEST_CASE("testbed: sensor profile drives the page") {
  TestbedOptions o;
  o.device.sensors = SensorProfile::hourly({26, 31});
  Testbed bed(o);
  CHECK(bed.http_get("/").body.find("Temperature = 26&deg;C") != std::string::npos);
  bed.advance(kMicrosPerHour);
  CHECK(bed.http_get("/").body.find("Temperature = 31&deg;C") != std::string::npos);
}

TEST_CASE("testbed: bridge both ways") {
  Testbed bed;
  CHECK(to_text(bed.spi_to_host(to_bytes("from spi"))) == "from spi");
  CHECK(to_text(bed.host_to_spi(to_bytes("to spi"))) == "to spi");
  CHECK(bed.spi_to_host({}).empty());
}

TEST_CASE("testbed: zero loss never times out and every frame parses") {
  std::mt19937 rng(17);
  Testbed bed(with_seed(17));
  int timeouts = 0;
  for (int i = 0; i < 40; ++i) {
    switch (rng() % 4) {
      case 0:
        for (const auto& p : bed.ping(bed.device_ip(), 2, rng() % 200)) timeouts += !p.reply;
        break;
      case 1: timeouts += bed.http_get("/?l1=" + std::to_string(rng() % 2)).error.has_value(); break;
      case 2: timeouts += bed.spi_to_host(Bytes(1 + rng() % 100, 1)).empty(); break;
      default: bed.advance(static_cast<std::int64_t>(rng() % 5000) * kMicrosPerMilli);
    }
  }
  CHECK(timeouts == 0);
  for (const auto& f : bed.wire().capture()) {
    CHECK_FALSE(f.lost);
    CHECK_NOTHROW(parse_fully(f.frame));
  }
}

TEST_CASE("testbed: loss stalls a connection into a timeout, not a hang") {
  TestbedOptions o = with_seed(2);
  o.wire.loss = 0.3;
  Testbed bed(o);
  std::vector<HttpResult> results;
  for (int i = 0; i < 30; ++i) {
    const std::int64_t start = bed.now_us();
    results.push_back(bed.http_get("/"));
    CHECK(bed.now_us() - start <= o.http_timeout_us + 10 * kMicrosPerMilli);
  }
  const auto first_bad = std::find_if(results.begin(), results.end(),
                                      [](const HttpResult& r) { return r.error.has_value(); });
  REQUIRE(first_bad != results.end());
  // The stall itself surfaces as a timeout.
  CHECK(*first_bad->error == HarnessErrc::Timeout);
  for (auto it = results.begin(); it != first_bad; ++it) CHECK(it->status == 200);
  // No timers: once the abort RST is also lost, the single slot stays held
  // and later SYNs are refused. That is the stack's limitation, reported as is.
  for (const auto& r : results) {
    if (r.error) CHECK((*r.error == HarnessErrc::Timeout || *r.error == HarnessErrc::ConnectionReset));
  }
}
