// Simulated peripherals of the smart device: two LEDs, LED animation mode,
// ADC preset, temperature sensor, 2x16 LCD and the served-page counter.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "embnet/wire.hpp"

namespace embnet {

inline constexpr int kAdcMax = 1023;
inline constexpr std::size_t kLcdWidth = 16;
inline constexpr int kRequestCountWrap = 1000;
inline constexpr int kDefaultAdcPreset = 482;
inline constexpr int kDefaultTemperatureC = 27;
// Operating range of common board-level temperature sensors.
inline constexpr int kMinTemperatureC = -55;
inline constexpr int kMaxTemperatureC = 150;
inline constexpr std::int64_t kMicrosPerHour = 3'600'000'000;
inline constexpr std::int64_t kAnimTickMicros = 250'000;

enum class LedMode { Blinking, Scanning };

struct DeviceState {
  bool led1 = false;
  bool led2 = false;
  LedMode led_mode = LedMode::Blinking;
  int adc_preset = kDefaultAdcPreset;
  int temperature_c = kDefaultTemperatureC;
  std::array<std::string, 2> lcd{std::string(kLcdWidth, ' '), std::string(kLcdWidth, ' ')};
  int request_count = 0;
  std::uint64_t anim_tick = 0;
  Ipv4Address device_ip{{192, 168, 1, 10}};
  Ipv4Address server_ip{{192, 168, 1, 11}};

  friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

// Control commands, as decoded from the web page.
struct SetLed {
  int index = 1;  // 1 or 2
  bool on = false;
  friend bool operator==(const SetLed&, const SetLed&) = default;
};
struct SetLedMode {
  LedMode mode = LedMode::Blinking;
  friend bool operator==(const SetLedMode&, const SetLedMode&) = default;
};
struct SetDeviceIp {
  Ipv4Address ip;
  friend bool operator==(const SetDeviceIp&, const SetDeviceIp&) = default;
};
struct SetServerIp {
  Ipv4Address ip;
  friend bool operator==(const SetServerIp&, const SetServerIp&) = default;
};
struct WriteLcd {
  int line = 1;  // 1 or 2
  std::string text;
  friend bool operator==(const WriteLcd&, const WriteLcd&) = default;
};

using ControlCommand = std::variant<SetLed, SetLedMode, SetDeviceIp, SetServerIp, WriteLcd>;

/// Pads or truncates to exactly 16 characters.
std::string lcd_line(std::string_view text);

/// Changes exactly the field the command targets.
DeviceState apply(DeviceState device, const ControlCommand& cmd);

/// Advances the page counter, wrapping 999 -> 0.
DeviceState count_request(DeviceState device);

class ProfileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProfileOutOfRange : public ProfileError {
 public:
  using ProfileError::ProfileError;
};

/// Hourly sensor table. Entry i applies from its hour until the next
/// entry's hour; before the first entry the first applies, after the last
/// the last holds.
class SensorProfile {
 public:
  struct Entry {
    std::int64_t hour = 0;
    int temperature_c = kDefaultTemperatureC;
    std::optional<int> adc;
  };

  SensorProfile() = default;
  /// Throws ProfileError on out-of-range values or unsorted hours.
  explicit SensorProfile(std::vector<Entry> entries);
  /// Consecutive hours starting at 0.
  static SensorProfile hourly(const std::vector<int>& temperatures);
  /// Lines of "hour,temperature_c[,adc]"; '#' starts a comment.
  static SensorProfile parse(std::string_view text);
  static SensorProfile load(const std::string& path);

  bool empty() const { return entries_.empty(); }
  const Entry* at(std::int64_t sim_time_us) const;

 private:
  std::vector<Entry> entries_;
};

/// Temperature (and ADC, when the profile drives it) at `sim_time_us`. An
/// empty profile leaves the current (constant) reading in place.
DeviceState sample_sensors(DeviceState device, const SensorProfile& profile,
                           std::int64_t sim_time_us);

}  // namespace embnet
