// The whole simulated board: controller, stack, web server, bridge and
// peripherals wired together behind a single service() entry point.

#pragma once

#include <cstdint>
#include <optional>

#include "embnet/bridge.hpp"
#include "embnet/device_model.hpp"
#include "embnet/http.hpp"
#include "embnet/netstack.hpp"
#include "embnet/nic.hpp"

namespace embnet {

struct DeviceOptions {
  NetConfig net;
  PageTemplate page = PageTemplate::Appendix;
  BridgeConfig bridge;
  SensorProfile sensors;
  /// Peripheral start state; device_ip is overwritten from net.ip.
  DeviceState initial;
  std::uint32_t iss_seed = 1;
};

class SmartDevice : private TcpApplication {
 public:
  explicit SmartDevice(DeviceOptions opts);
  SmartDevice(const SmartDevice&) = delete;
  SmartDevice& operator=(const SmartDevice&) = delete;

  Nic& nic() { return nic_; }
  const Nic& nic() const { return nic_; }

  /// One pass of the main loop at simulated time `now_us`: sample sensors,
  /// drain the controller, hand bridged bytes to the SPI device.
  void service(std::int64_t now_us);

  /// Bytes arriving from the attached SPI slave device.
  void spi_device_write(ByteView bytes);
  void spi_flush();
  /// Bytes delivered to the SPI slave device since the last call.
  Bytes take_spi_device_output();

  const DeviceState& state() const { return state_; }
  void set_state(const DeviceState& s) { state_ = s; }
  const NetStack& stack() const { return stack_; }
  const Bridge& bridge() const { return bridge_; }
  Bridge& bridge() { return bridge_; }
  const HttpServer& http() const { return http_; }
  std::optional<Ipv4Address> pending_ip() const { return pending_ip_; }
  std::uint64_t responses_sent() const { return responses_sent_; }

 private:
  std::optional<AppReply> on_data(const TcpConn& conn) override;

  Nic nic_;
  SpiEthernetDriver driver_;
  NetStack stack_;
  Bridge bridge_;
  HttpServer http_;
  SensorProfile sensors_;
  DeviceState state_;
  std::optional<Ipv4Address> pending_ip_;
  Bytes spi_device_out_;
  std::uint64_t responses_sent_ = 0;
};

}  // namespace embnet
