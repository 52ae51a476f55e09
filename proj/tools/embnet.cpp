// embnet: command-line front end for the simulated board.
//
// Every subcommand builds a fresh testbed (device + virtual cable + host)
// from the global flags. `serve` is the only one that touches a real socket:
// it proxies loopback HTTP connections onto the virtual cable.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "embnet/harness.hpp"
#include "embnet/logger.hpp"
#include "embnet/scenario.hpp"

using namespace embnet;

namespace {

struct Globals {
  std::string ip = "192.168.1.10";
  std::string mask = "255.255.255.0";
  std::string gw = "192.168.1.1";
  std::string dns = "192.168.1.1";
  std::string mac = "02:00:00:00:00:10";
  std::string profile;
  std::string page = "appendix";
  std::uint64_t seed = 1;
  double loss = 0.0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Ipv4Address parse_ip_flag(const std::string& flag, const std::string& text) {
  const auto ip = Ipv4Address::parse(text);
  if (!ip) throw std::runtime_error(flag + ": not a dotted-quad address: " + text);
  return *ip;
}

TestbedOptions make_options(const Globals& g) {
  TestbedOptions opts;
  NetConfig& net = opts.device.net;
  net.ip = parse_ip_flag("--ip", g.ip);
  net.subnet_mask = parse_ip_flag("--mask", g.mask);
  net.gateway = parse_ip_flag("--gw", g.gw);
  net.dns = parse_ip_flag("--dns", g.dns);
  const auto mac = MacAddress::parse(g.mac);
  if (!mac) throw std::runtime_error("--mac: not a MAC address: " + g.mac);
  net.mac = *mac;
  if (!net.valid()) throw std::runtime_error("network configuration is not usable");

  const auto page = parse_template_name(g.page);
  if (!page) throw std::runtime_error("--template: expected appendix or postform");
  opts.device.page = *page;
  if (!g.profile.empty()) opts.device.sensors = SensorProfile::load(g.profile);
  opts.wire.seed = g.seed;
  opts.wire.loss = g.loss;
  return opts;
}

void print_http(const HttpResult& r) {
  if (r.error) {
    std::cerr << "error: " << to_string(*r.error) << '\n';
    return;
  }
  std::cout << to_text(r.raw);
  if (!r.raw.empty() && r.raw.back() != '\n') std::cout << '\n';
}

// ---------------------------------------------------------------------------
// serve

volatile std::sig_atomic_t g_stop = 0;

int serve(Testbed& bed, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 8) != 0) {
    ::close(fd);
    throw std::runtime_error("cannot listen on 127.0.0.1:" + std::to_string(port));
  }
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::cout << "device " << bed.device_ip().to_string() << " reachable at http://127.0.0.1:"
            << port << "/ (Ctrl-C to stop)" << std::endl;

  while (!g_stop) {
    const int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) continue;
    Bytes request;
    char buf[2048];
    while (request.size() <= kMaxRequestBytes) {
      const ssize_t n = ::recv(client, buf, sizeof buf, 0);
      if (n <= 0) break;
      request.insert(request.end(), buf, buf + n);
      if (parse_request(request).status != ParseStatus::Incomplete) break;
    }
    if (!request.empty()) {
      // Wall time between browser requests maps onto the simulated clock
      // only coarsely: one second per request keeps the LED animation moving.
      bed.advance(1000 * kMicrosPerMilli);
      const HttpResult r = bed.http_raw(request);
      const Bytes& out = r.error ? build_response(render_bad_request(to_string(*r.error)),
                                                  HttpStatus::BadRequest)
                                 : r.raw;
      std::size_t sent = 0;
      while (sent < out.size()) {
        const ssize_t n = ::send(client, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) break;
        sent += static_cast<std::size_t>(n);
      }
      std::cerr << (r.error ? to_string(*r.error) : std::to_string(r.status)) << ' '
                << to_text(Bytes(request.begin(),
                                 std::find(request.begin(), request.end(), '\r')))
                << '\n';
    }
    ::close(client);
  }
  ::close(fd);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated SPI-Ethernet smart device on a virtual LAN"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--ip", g.ip, "device IPv4 address")->capture_default_str();
  app.add_option("--mask", g.mask, "subnet mask")->capture_default_str();
  app.add_option("--gw", g.gw, "default gateway")->capture_default_str();
  app.add_option("--dns", g.dns, "DNS server (stored only)")->capture_default_str();
  app.add_option("--mac", g.mac, "device MAC address")->capture_default_str();
  app.add_option("--profile", g.profile, "sensor profile file (hour,temp[,adc] lines)");
  app.add_option("--seed", g.seed, "wire RNG seed")->capture_default_str();
  app.add_option("--loss", g.loss, "frame loss probability on the wire")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--template", g.page, "control page: appendix or postform")
      ->capture_default_str();

  std::uint16_t port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "expose the control page on 127.0.0.1");
  serve_cmd->add_option("--port", port, "loopback TCP port")->capture_default_str();

  std::string target;
  int count = 4;
  std::size_t size = 32;
  auto* ping_cmd = app.add_subcommand("ping", "ping the device, Windows-style output");
  ping_cmd->add_option("target", target, "address to ping (default: device)");
  ping_cmd->add_option("-n,--count", count, "echo requests")->capture_default_str();
  ping_cmd->add_option("-l,--size", size, "payload bytes")->capture_default_str()
      ->check(CLI::Range(0, 1472));

  std::string path = "/";
  auto* get_cmd = app.add_subcommand("get", "fetch a page and print the raw response");
  get_cmd->add_option("path", path, "path and query, e.g. /?l1=1")->capture_default_str();

  std::string body;
  auto* post_cmd = app.add_subcommand("post", "POST a form body");
  post_cmd->add_option("path", path, "path")->capture_default_str();
  post_cmd->add_option("-d,--data", body, "urlencoded body, e.g. radio=1")->required();

  std::string demo_text = "Hello from the SPI slave";
  auto* bridge_cmd = app.add_subcommand("bridge-demo", "move bytes SPI->UDP and UDP->SPI");
  bridge_cmd->add_option("--text", demo_text, "payload")->capture_default_str();

  std::string file;
  bool strict = false;
  auto* log_cmd = app.add_subcommand("log-render", "render a temperature log as an HTML table");
  log_cmd->add_option("file", file, "log file (date|temp,...)")->required();
  log_cmd->add_flag("--strict", strict, "reject malformed records instead of mimicking the original");

  std::string pcap;
  auto* scn_cmd = app.add_subcommand("scenario", "run a scenario script");
  scn_cmd->add_option("file", file, "scenario file")->required();
  scn_cmd->add_option("--pcap", pcap, "write every frame on the wire to this pcap file");
  // Accept the wire/template flags after the subcommand as well.
  scn_cmd->add_option("--seed", g.seed, "wire RNG seed");
  scn_cmd->add_option("--loss", g.loss, "frame loss probability")->check(CLI::Range(0.0, 1.0));
  scn_cmd->add_option("--template", g.page, "appendix or postform");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the error
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*log_cmd) {
      const auto records =
          parse_log(read_file(file), strict ? LogParseMode::Strict : LogParseMode::Faithful);
      std::cout << render_log_table(records);
      return 0;
    }

    if (*scn_cmd) {
      const auto steps = parse_scenario(read_file(file));
      const ScenarioReport report = run_scenario(steps, make_options(g));
      std::cout << report.text;
      if (!pcap.empty()) write_pcap(pcap, report.capture);
      return report.ok() ? 0 : 1;
    }

    Testbed bed(make_options(g));

    if (*serve_cmd) return serve(bed, port);

    if (*ping_cmd) {
      const Ipv4Address dst = target.empty() ? bed.device_ip() : parse_ip_flag("target", target);
      const auto results = bed.ping(dst, count, size);
      std::cout << format_ping_report(results, dst, size);
      const bool all = std::all_of(results.begin(), results.end(),
                                   [](const PingResult& r) { return r.reply; });
      return all ? 0 : 1;
    }

    if (*get_cmd || *post_cmd) {
      const HttpResult r = *get_cmd ? bed.http_get(path) : bed.http_post(path, body);
      print_http(r);
      return !r.error && r.status == 200 ? 0 : 1;
    }

    if (*bridge_cmd) {
      const Bytes up = bed.spi_to_host(to_bytes(demo_text));
      std::cout << "spi -> udp:" << kBridgeHostPort << "  \"" << to_text(up) << "\"\n";
      const Bytes down = bed.host_to_spi(to_bytes(demo_text));
      std::cout << "udp:" << kBridgeDevicePort << " -> spi  \"" << to_text(down) << "\"\n";
      return to_text(up) == demo_text && to_text(down) == demo_text ? 0 : 1;
    }
  } catch (const ScenarioParseError& e) {
    std::cerr << file << ':' << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
