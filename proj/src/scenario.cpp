#include "embnet/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace embnet {

namespace {

struct VerbRule {
  std::size_t min_positional;
  std::size_t max_positional;
  std::set<std::string> args;
  std::set<std::string> expects;
};

const std::set<std::string> kHttpExpects = {"status", "contains", "not_contains",
                                            "header", "fin",      "prefix", "error"};

const std::map<std::string, VerbRule>& rules() {
  static const std::map<std::string, VerbRule> r = {
      {"ping", {0, 1, {"count", "size"}, {"replies", "bytes", "ttl", "timeouts"}}},
      {"get", {1, 1, {}, kHttpExpects}},
      {"post", {1, 1, {"body"}, kHttpExpects}},
      {"spi-send", {1, 1, {}, {"udp"}}},
      {"udp-send", {1, 1, {}, {"spi"}}},
      {"advance", {1, 1, {}, {}}},
      {"link", {1, 1, {}, {}}},
  };
  return r;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits on whitespace; quotes may open anywhere in a token (key="a b").
// An unquoted # at the start of a token ends the line.
std::vector<std::string> tokenize(std::string_view line, std::size_t line_no) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size() || line[i] == '#') break;  // trailing comment
    std::string tok;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
      if (line[i] != '"') {
        tok += line[i++];
        continue;
      }
      ++i;
      bool closed = false;
      while (i < line.size()) {
        const char c = line[i++];
        if (c == '"') {
          closed = true;
          break;
        }
        if (c != '\\') {
          tok += c;
          continue;
        }
        if (i >= line.size()) break;
        switch (const char esc = line[i++]) {
          case 'n': tok += '\n'; break;
          case 'r': tok += '\r'; break;
          case 't': tok += '\t'; break;
          case '"':
          case '\\': tok += esc; break;
          default:
            throw ScenarioParseError(line_no, std::string("unknown escape \\") + esc);
        }
      }
      if (!closed) throw ScenarioParseError(line_no, "unterminated quote");
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::optional<long long> to_int(std::string_view s) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

const std::string* find(const std::vector<std::pair<std::string, std::string>>& kv,
                        std::string_view key) {
  for (const auto& [k, v] : kv) {
    if (k == key) return &v;
  }
  return nullptr;
}

long long int_arg(const ScenarioStep& s, std::string_view key, long long fallback) {
  const std::string* v = find(s.args, key);
  return v ? *to_int(*v) : fallback;
}

// Printable rendering of a byte string for the report.
std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

void validate(const ScenarioStep& s) {
  const auto it = rules().find(s.verb);
  if (it == rules().end()) throw ScenarioParseError(s.line, "unknown verb '" + s.verb + "'");
  const VerbRule& rule = it->second;
  if (s.positional.size() < rule.min_positional || s.positional.size() > rule.max_positional) {
    throw ScenarioParseError(s.line, "wrong number of arguments for '" + s.verb + "'");
  }
  for (const auto& [k, v] : s.args) {
    if (!rule.args.count(k)) throw ScenarioParseError(s.line, "unknown argument '" + k + "'");
    if ((k == "count" || k == "size") && (!to_int(v) || *to_int(v) < 0)) {
      throw ScenarioParseError(s.line, k + " must be a non-negative integer");
    }
  }
  for (const auto& [k, v] : s.expects) {
    if (!rule.expects.count(k)) throw ScenarioParseError(s.line, "unknown expectation '" + k + "'");
    const bool numeric = k == "replies" || k == "bytes" || k == "ttl" || k == "timeouts" ||
                         k == "status";
    if (numeric && !to_int(v)) throw ScenarioParseError(s.line, k + " must be an integer");
    if (k == "fin" && v != "0" && v != "1") throw ScenarioParseError(s.line, "fin must be 0 or 1");
  }
  if (s.verb == "ping" && !s.positional.empty() && !Ipv4Address::parse(s.positional[0])) {
    throw ScenarioParseError(s.line, "bad address '" + s.positional[0] + "'");
  }
  if (s.verb == "advance" && (!to_int(s.positional[0]) || *to_int(s.positional[0]) < 0)) {
    throw ScenarioParseError(s.line, "advance takes milliseconds");
  }
  if (s.verb == "link" && s.positional[0] != "up" && s.positional[0] != "down") {
    throw ScenarioParseError(s.line, "link takes up or down");
  }
}

class Checker {
 public:
  explicit Checker(ScenarioReport& report) : report_(report) {}

  void check(bool ok, const std::string& key, const std::string& expected,
             const std::string& actual) {
    std::ostringstream line;
    if (ok) {
      ++report_.passed;
      line << "  PASS " << key << '=' << expected << '\n';
    } else {
      ++report_.failed;
      line << "  FAIL " << key << '=' << expected << " (got " << actual << ")\n";
    }
    report_.text += line.str();
  }

 private:
  ScenarioReport& report_;
};

void check_http(const ScenarioStep& s, const HttpResult& r, Checker& c, ScenarioReport& report) {
  std::ostringstream summary;
  if (r.error) {
    summary << "  error " << to_string(*r.error) << '\n';
  } else {
    summary << "  HTTP " << r.status << ", " << r.body.size() << " body bytes"
            << (r.server_fin ? ", server FIN" : "") << '\n';
  }
  report.text += summary.str();

  const std::string raw = to_text(r.raw);
  for (const auto& [k, v] : s.expects) {
    if (k == "status") {
      c.check(!r.error && r.status == *to_int(v), k, v,
              r.error ? to_string(*r.error) : std::to_string(r.status));
    } else if (k == "contains") {
      c.check(r.body.find(v) != std::string::npos, k, quoted(v), "absent");
    } else if (k == "not_contains") {
      c.check(r.body.find(v) == std::string::npos, k, quoted(v), "present");
    } else if (k == "prefix") {
      c.check(raw.rfind(v, 0) == 0, k, quoted(v), quoted(raw.substr(0, v.size())));
    } else if (k == "header") {
      const bool found = std::any_of(r.headers.begin(), r.headers.end(), [&](const auto& h) {
        return h.first + ": " + h.second == v;
      });
      c.check(found, k, quoted(v), "absent");
    } else if (k == "error") {
      const std::string got = r.error ? to_string(*r.error) : "none";
      c.check(got == v, k, v, got);
    } else if (k == "fin") {
      c.check(r.server_fin == (v == "1"), k, v, r.server_fin ? "1" : "0");
    }
  }
}

}  // namespace

std::vector<ScenarioStep> parse_scenario(std::string_view text) {
  std::vector<ScenarioStep> steps;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    const auto tokens = tokenize(line, line_no);
    ScenarioStep step;
    step.line = line_no;
    step.text = std::string(line);
    step.verb = tokens.front();
    bool in_expect = false;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      const std::string& t = tokens[i];
      if (t == "expect") {
        if (in_expect) throw ScenarioParseError(line_no, "duplicate 'expect'");
        in_expect = true;
        continue;
      }
      const auto eq = t.find('=');
      const bool keyed = eq != std::string::npos && eq > 0 &&
                         std::all_of(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(eq),
                                     [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'; });
      if (in_expect) {
        if (!keyed) throw ScenarioParseError(line_no, "expectations are key=value, got '" + t + "'");
        step.expects.emplace_back(t.substr(0, eq), t.substr(eq + 1));
      } else if (keyed && step.verb != "spi-send" && step.verb != "udp-send") {
        step.args.emplace_back(t.substr(0, eq), t.substr(eq + 1));
      } else {
        step.positional.push_back(t);
      }
    }
    validate(step);
    steps.push_back(std::move(step));
  }
  return steps;
}

ScenarioReport run_scenario(const std::vector<ScenarioStep>& steps, TestbedOptions opts) {
  ScenarioReport report;
  Checker c(report);
  Testbed bed(std::move(opts));

  std::size_t n = 0;
  for (const auto& s : steps) {
    report.text += "step " + std::to_string(++n) + " (line " + std::to_string(s.line) +
                   "): " + s.text + '\n';

    if (s.verb == "ping") {
      const Ipv4Address target =
          s.positional.empty() ? bed.device_ip() : *Ipv4Address::parse(s.positional[0]);
      const auto count = static_cast<int>(int_arg(s, "count", 4));
      const auto size = static_cast<std::size_t>(int_arg(s, "size", 32));
      const auto results = bed.ping(target, count, size);
      std::istringstream lines(format_ping_report(results, target, size));
      for (std::string l; std::getline(lines, l);) report.text += "  " + l + '\n';

      const auto replies = std::count_if(results.begin(), results.end(),
                                         [](const PingResult& r) { return r.reply; });
      for (const auto& [k, v] : s.expects) {
        const long long want = *to_int(v);
        if (k == "replies") {
          c.check(replies == want, k, v, std::to_string(replies));
        } else if (k == "timeouts") {
          const auto timeouts = static_cast<long long>(results.size()) - replies;
          c.check(timeouts == want, k, v, std::to_string(timeouts));
        } else {
          // bytes / ttl must hold for every echo.
          std::string bad;
          for (const auto& r : results) {
            const long long got = !r.reply ? -1 : k == "bytes" ? static_cast<long long>(r.bytes)
                                                               : static_cast<long long>(r.ttl);
            if (got != want && bad.empty()) bad = r.reply ? std::to_string(got) : "timeout";
          }
          c.check(bad.empty() && !results.empty(), k, v, bad.empty() ? "no echoes" : bad);
        }
      }
    } else if (s.verb == "get") {
      check_http(s, bed.http_get(s.positional[0]), c, report);
    } else if (s.verb == "post") {
      const std::string* body = find(s.args, "body");
      check_http(s, bed.http_post(s.positional[0], body ? *body : std::string()), c, report);
    } else if (s.verb == "spi-send") {
      const std::string got = to_text(bed.spi_to_host(to_bytes(s.positional[0])));
      report.text += "  host received " + quoted(got) + '\n';
      for (const auto& [k, v] : s.expects) c.check(got == v, k, quoted(v), quoted(got));
    } else if (s.verb == "udp-send") {
      const std::string got = to_text(bed.host_to_spi(to_bytes(s.positional[0])));
      report.text += "  spi device received " + quoted(got) + '\n';
      for (const auto& [k, v] : s.expects) c.check(got == v, k, quoted(v), quoted(got));
    } else if (s.verb == "advance") {
      bed.advance(*to_int(s.positional[0]) * kMicrosPerMilli);
    } else if (s.verb == "link") {
      bed.set_link(s.positional[0] == "up");
    }
  }

  report.text += "summary: " + std::to_string(report.passed) + " passed, " +
                 std::to_string(report.failed) + " failed\n";
  report.capture = bed.wire().capture();
  return report;
}

}  // namespace embnet
