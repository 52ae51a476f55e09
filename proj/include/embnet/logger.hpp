// Temperature-log page: parses "timestamp|temperature" records joined by ','
// and renders them as an HTML table.

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace embnet {

struct LogRecord {
  std::string timestamp_text;
  std::string temperature_c;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

enum class LogParseMode {
  /// Mirrors the original logger script: elements 0..count-2 of the ','
  /// split are used, so a final record without a trailing ',' is skipped.
  /// An element without '|' yields an empty temperature.
  Faithful,
  /// Every non-empty element is a record (one trailing ',' allowed) and
  /// must contain exactly one '|'.
  Strict,
};

class MalformedRecord : public std::runtime_error {
 public:
  MalformedRecord(std::size_t index, const std::string& what)
      : std::runtime_error(what), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

std::vector<LogRecord> parse_log(std::string_view content,
                                 LogParseMode mode = LogParseMode::Faithful);

std::string render_log_table(std::span<const LogRecord> records);

}  // namespace embnet
