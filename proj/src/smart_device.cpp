#include "embnet/smart_device.hpp"

namespace embnet {

SmartDevice::SmartDevice(DeviceOptions opts)
    : nic_(opts.net.mac),
      driver_(nic_),
      stack_(opts.net, opts.iss_seed),
      bridge_(opts.bridge),
      http_(opts.page),
      sensors_(std::move(opts.sensors)),
      state_(opts.initial) {
  state_.device_ip = opts.net.ip;
  stack_.attach_tcp_app(this);
  stack_.attach_bridge(&bridge_);
  stack_.init(driver_);
}

void SmartDevice::service(std::int64_t now_us) {
  state_ = sample_sensors(state_, sensors_, now_us);
  stack_.poll(driver_);
  // A new address is adopted only once the page announcing it has gone out
  // and the connection is back to listening.
  if (pending_ip_ && stack_.tcp().state == TcpState::Listen) {
    stack_.set_ip(*pending_ip_);
    pending_ip_.reset();
  }
  const Bytes drained = bridge_.drain_to_spi();
  spi_device_out_.insert(spi_device_out_.end(), drained.begin(), drained.end());
}

void SmartDevice::spi_device_write(ByteView bytes) {
  if (auto dgram = bridge_.spi_ingress(bytes)) {
    stack_.send_udp(driver_, bridge_.config().peer_ip, *dgram);
  }
}

void SmartDevice::spi_flush() {
  if (auto dgram = bridge_.flush()) stack_.send_udp(driver_, bridge_.config().peer_ip, *dgram);
}

Bytes SmartDevice::take_spi_device_output() {
  Bytes out = std::move(spi_device_out_);
  spi_device_out_.clear();
  return out;
}

std::optional<AppReply> SmartDevice::on_data(const TcpConn& conn) {
  auto outcome = http_.handle(conn.rx_assembled, state_);
  if (!outcome) return std::nullopt;
  state_ = outcome->device;
  if (outcome->new_device_ip && *outcome->new_device_ip != stack_.config().ip) {
    pending_ip_ = outcome->new_device_ip;
  }
  ++responses_sent_;
  return AppReply{std::move(outcome->response), true};
}

}  // namespace embnet
