#include "embnet/device_model.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace embnet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <class Int>
Int parse_int(std::string_view field, std::size_t line_no) {
  field = trim(field);
  Int value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ProfileError("sensor profile line " + std::to_string(line_no) + ": bad number '" +
                       std::string(field) + "'");
  }
  return value;
}

void check_entry(const SensorProfile::Entry& e) {
  if (e.temperature_c < kMinTemperatureC || e.temperature_c > kMaxTemperatureC) {
    throw ProfileOutOfRange("sensor profile: temperature " + std::to_string(e.temperature_c) +
                       " out of range");
  }
  if (e.adc && (*e.adc < 0 || *e.adc > kAdcMax)) {
    throw ProfileOutOfRange("sensor profile: adc " + std::to_string(*e.adc) + " out of range");
  }
  if (e.hour < 0) throw ProfileError("sensor profile: negative hour");
}

}  // namespace

std::string lcd_line(std::string_view text) {
  std::string line(text.substr(0, kLcdWidth));
  line.resize(kLcdWidth, ' ');
  return line;
}

DeviceState apply(DeviceState device, const ControlCommand& cmd) {
  std::visit(overloaded{
                 [&](const SetLed& c) { (c.index == 1 ? device.led1 : device.led2) = c.on; },
                 [&](const SetLedMode& c) { device.led_mode = c.mode; },
                 [&](const SetDeviceIp& c) { device.device_ip = c.ip; },
                 [&](const SetServerIp& c) { device.server_ip = c.ip; },
                 [&](const WriteLcd& c) { device.lcd[c.line == 1 ? 0 : 1] = lcd_line(c.text); },
             },
             cmd);
  return device;
}

DeviceState count_request(DeviceState device) {
  device.request_count = (device.request_count + 1) % kRequestCountWrap;
  return device;
}

SensorProfile::SensorProfile(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    check_entry(entries_[i]);
    if (i > 0 && entries_[i].hour <= entries_[i - 1].hour) {
      throw ProfileError("sensor profile: hours must be strictly increasing");
    }
  }
}

SensorProfile SensorProfile::hourly(const std::vector<int>& temperatures) {
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < temperatures.size(); ++i) {
    entries.push_back(Entry{static_cast<std::int64_t>(i), temperatures[i], std::nullopt});
  }
  return SensorProfile(std::move(entries));
}

SensorProfile SensorProfile::parse(std::string_view text) {
  std::vector<Entry> entries;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields.size() < 2 || fields.size() > 3) {
      throw ProfileError("sensor profile line " + std::to_string(line_no) +
                         ": expected hour,temperature_c[,adc]");
    }
    Entry e;
    e.hour = parse_int<std::int64_t>(fields[0], line_no);
    e.temperature_c = parse_int<int>(fields[1], line_no);
    if (fields.size() == 3) e.adc = parse_int<int>(fields[2], line_no);
    entries.push_back(e);
  }
  return SensorProfile(std::move(entries));
}

SensorProfile SensorProfile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ProfileError("cannot open sensor profile " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const SensorProfile::Entry* SensorProfile::at(std::int64_t sim_time_us) const {
  if (entries_.empty()) return nullptr;
  const std::int64_t hour = sim_time_us / kMicrosPerHour;
  const Entry* current = &entries_.front();
  for (const auto& e : entries_) {
    if (e.hour > hour) break;
    current = &e;
  }
  return current;
}

DeviceState sample_sensors(DeviceState device, const SensorProfile& profile,
                           std::int64_t sim_time_us) {
  device.anim_tick = static_cast<std::uint64_t>(sim_time_us / kAnimTickMicros);
  if (const auto* e = profile.at(sim_time_us)) {
    check_entry(*e);
    device.temperature_c = e->temperature_c;
    if (e->adc) device.adc_preset = *e->adc;
  }
  return device;
}

}  // namespace embnet
