#include "embnet/logger.hpp"

namespace embnet {

namespace {

std::vector<std::string_view> explode(char sep, std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto at = s.find(sep, pos);
    parts.push_back(s.substr(pos, at - pos));
    if (at == std::string_view::npos) break;
    pos = at + 1;
  }
  return parts;
}

}  // namespace

std::vector<LogRecord> parse_log(std::string_view content, LogParseMode mode) {
  std::vector<LogRecord> records;
  auto all = explode(',', content);

  if (mode == LogParseMode::Faithful) {
    for (std::size_t i = 0; i + 1 < all.size(); ++i) {
      const auto fields = explode('|', all[i]);
      records.push_back(LogRecord{std::string(fields[0]),
                                  fields.size() > 1 ? std::string(fields[1]) : std::string{}});
    }
    return records;
  }

  if (!all.empty() && all.back().empty()) all.pop_back();
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto fields = explode('|', all[i]);
    if (fields.size() != 2) {
      throw MalformedRecord(i, "log record " + std::to_string(i) + " '" + std::string(all[i]) +
                                   "' is not timestamp|temperature");
    }
    records.push_back(LogRecord{std::string(fields[0]), std::string(fields[1])});
  }
  return records;
}

std::string render_log_table(std::span<const LogRecord> records) {
  std::string out =
      "<title>AVR Ethernet Logger</title>\n"
      "<table><tr><td align=\"center\"><b>Date & time<b></td>"
      "<td align=\"center\"><b>Temperature</b></td></tr>";
  for (const auto& r : records) {
    out += "<tr><td align=\"center\">" + r.timestamp_text + "</td><td align=\"center\">" +
           r.temperature_c + "&deg;C</td></tr>";
  }
  out += "</table>";
  return out;
}

}  // namespace embnet
