#include <sstream>

#include "embnet/harness.hpp"

namespace embnet {

const char* to_string(HarnessErrc code) {
  switch (code) {
    case HarnessErrc::Timeout: return "Timeout";
    case HarnessErrc::ConnectionReset: return "ConnectionReset";
  }
  return "?";
}

std::string format_ping_report(const std::vector<PingResult>& results, Ipv4Address target,
                               std::size_t payload_size) {
  const std::string ip = target.to_string();
  std::ostringstream out;
  out << "Pinging " << ip << " with " << payload_size << " bytes of data:\n";
  for (const auto& r : results) {
    if (r.reply) {
      out << "Reply from " << ip << ": bytes=" << r.bytes << " time=" << r.time_ms
          << "ms TTL=" << int{r.ttl} << '\n';
    } else {
      out << "Request timed out.\n";
    }
  }
  return out.str();
}

namespace {

HttpResult split_response(Bytes raw) {
  HttpResult r;
  const std::string text = to_text(raw);
  r.raw = std::move(raw);
  const auto head_end = text.find("\r\n\r\n");
  const std::string head = text.substr(0, head_end);
  if (head_end != std::string::npos) r.body = text.substr(head_end + 4);

  std::istringstream lines(head);
  std::string line;
  if (std::getline(lines, line)) {
    // "HTTP/1.0 200 OK"
    const auto sp = line.find(' ');
    if (sp != std::string::npos) r.status = std::atoi(line.c_str() + sp + 1);
  }
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string value = line.substr(colon + 1);
    if (!value.empty() && value.front() == ' ') value.erase(0, 1);
    r.headers.emplace_back(line.substr(0, colon), value);
  }
  return r;
}

}  // namespace

Testbed::Testbed(TestbedOptions opts)
    : opts_(std::move(opts)), wire_(opts_.wire), device_(opts_.device), host_(opts_.host) {
  device_.nic().attach_medium(
      [this](Bytes frame) { wire_.send(Direction::DeviceToHost, std::move(frame), now_us_); });
  host_.attach(
      [this](Bytes frame) { wire_.send(Direction::HostToDevice, std::move(frame), now_us_); });
  host_.bridge().set_peer(device_ip());
  device_.service(now_us_);
}

bool Testbed::step(std::int64_t limit_us) {
  const auto next = wire_.next_delivery();
  if (!next || *next > limit_us) return false;
  now_us_ = std::max(now_us_, *next);
  for (auto& d : wire_.take_due(now_us_)) {
    if (d.dir == Direction::HostToDevice) {
      device_.nic().wire_deliver(d.frame);
      device_.service(now_us_);
    } else {
      host_.receive(d.frame, now_us_);
    }
  }
  return true;
}

void Testbed::advance(std::int64_t us) {
  const std::int64_t target = now_us_ + us;
  while (step(target)) {
  }
  now_us_ = target;
  device_.service(now_us_);
}

bool Testbed::run_until(const std::function<bool()>& done, std::int64_t deadline_us) {
  while (!done()) {
    if (!step(deadline_us)) {
      if (now_us_ < deadline_us) {
        now_us_ = deadline_us;
        device_.service(now_us_);
      }
      return done();
    }
  }
  return true;
}

void Testbed::set_link(bool up) { device_.nic().set_link(up); }

bool Testbed::resolve(Ipv4Address ip, std::int64_t deadline_us) {
  if (host_.arp_lookup(ip)) return true;
  host_.request_arp(ip);
  return run_until([&] { return host_.arp_lookup(ip).has_value(); }, deadline_us);
}

std::vector<PingResult> Testbed::ping(Ipv4Address target, int count, std::size_t size) {
  std::vector<PingResult> results;
  for (int i = 0; i < count; ++i) {
    const std::int64_t start = now_us_;
    const std::int64_t deadline = start + opts_.ping_timeout_us;
    PingResult r;
    if (resolve(target, deadline)) {
      const std::int64_t sent = now_us_;
      const std::uint16_t seq = host_.send_echo(target, size);
      if (run_until([&] { return host_.echo_reply(seq).has_value(); }, sent + opts_.ping_timeout_us)) {
        const EchoReply e = *host_.echo_reply(seq);
        r = PingResult{true, e.bytes, (e.at_us - sent) / kMicrosPerMilli, e.ttl};
      }
    }
    results.push_back(r);
    if (i + 1 < count && now_us_ < start + opts_.ping_interval_us) {
      advance(start + opts_.ping_interval_us - now_us_);
    }
  }
  return results;
}

HttpResult Testbed::http_get(const std::string& target) {
  return http_raw(to_bytes("GET " + target + " HTTP/1.0\r\n\r\n"));
}

HttpResult Testbed::http_post(const std::string& target, const std::string& body) {
  return http_raw(to_bytes("POST " + target +
                           " HTTP/1.0\r\nContent-Type: application/x-www-form-urlencoded\r\n"
                           "Content-Length: " +
                           std::to_string(body.size()) + "\r\n\r\n" + body));
}

HttpResult Testbed::http_raw(Bytes request) {
  const Ipv4Address dst = device_ip();
  const std::int64_t deadline = now_us_ + opts_.http_timeout_us;
  HttpResult timed_out;
  timed_out.error = HarnessErrc::Timeout;
  if (!resolve(dst, deadline)) return timed_out;

  host_.tcp_open(dst, kHttpPort, std::move(request));
  const bool finished =
      run_until([&] { return host_.tcp().state == ClientState::Done; }, deadline);
  if (!finished) {
    // No retransmission anywhere: a lost segment stalls the exchange. Reset
    // so the device's only connection slot is usable again.
    host_.tcp_abort();
    run_until([&] { return wire_.idle(); }, now_us_ + opts_.http_timeout_us);
    timed_out.raw = host_.tcp().received;
    return timed_out;
  }
  // Let the final ACK reach the device so its slot is back to Listen.
  run_until([&] { return wire_.idle(); }, now_us_ + opts_.http_timeout_us);

  HttpResult r = split_response(host_.tcp().received);
  r.server_fin = host_.tcp().server_fin;
  if (host_.tcp().reset) r.error = HarnessErrc::ConnectionReset;
  return r;
}

Bytes Testbed::spi_to_host(ByteView bytes) {
  device_.spi_device_write(bytes);
  device_.spi_flush();
  run_until([&] { return wire_.idle(); }, now_us_ + opts_.bridge_timeout_us);
  return host_.bridge().drain_to_spi();
}

Bytes Testbed::host_to_spi(ByteView bytes) {
  const Ipv4Address dst = device_ip();
  if (!resolve(dst, now_us_ + opts_.bridge_timeout_us)) return {};
  host_.bridge().set_peer(dst);
  if (auto dgram = host_.bridge().spi_ingress(bytes)) host_.send_udp(dst, *dgram);
  if (auto dgram = host_.bridge().flush()) host_.send_udp(dst, *dgram);
  run_until([&] { return wire_.idle(); }, now_us_ + opts_.bridge_timeout_us);
  return device_.take_spi_device_output();
}

}  // namespace embnet
