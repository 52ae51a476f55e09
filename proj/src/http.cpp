#include "embnet/http.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <stdexcept>

#include "embnet_templates.hpp"

namespace embnet {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string decode(std::string_view text, bool plus_is_space) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '+' && plus_is_space) {
      out += ' ';
    } else if (c == '%' && i + 2 < text.size() && hex_value(text[i + 1]) >= 0 &&
               hex_value(text[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2]));
      i += 2;
    } else {
      out += c;
    }
  }
  return out;
}

ParseResult malformed(std::string why) {
  ParseResult r;
  r.status = ParseStatus::Malformed;
  r.error = std::move(why);
  return r;
}

std::vector<std::string_view> split_lines(std::string_view block) {
  std::vector<std::string_view> lines;
  while (!block.empty()) {
    const auto nl = block.find('\n');
    std::string_view line = block.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    block.remove_prefix(nl + 1);
  }
  return lines;
}

std::optional<std::string> check_request_line(std::string_view line, HttpRequest& req) {
  const auto sp1 = line.find(' ');
  const auto sp2 = sp1 == std::string_view::npos ? sp1 : line.find(' ', sp1 + 1);
  if (sp2 == std::string_view::npos || line.find(' ', sp2 + 1) != std::string_view::npos) {
    return "request line must have three fields";
  }
  const std::string_view method = line.substr(0, sp1);
  std::string_view target = line.substr(sp1 + 1, sp2 - sp1 - 1);
  const std::string_view version = line.substr(sp2 + 1);

  if (method == "GET") {
    req.method = HttpMethod::Get;
  } else if (method == "POST") {
    req.method = HttpMethod::Post;
  } else {
    return "unsupported method '" + std::string(method) + "'";
  }
  if (version.size() < 8 || version.substr(0, 5) != "HTTP/") {
    return "bad protocol version";
  }
  // Absolute-form targets: keep only the path part.
  if (target.substr(0, 7) == "http://") {
    const auto slash = target.find('/', 7);
    target = slash == std::string_view::npos ? std::string_view("/") : target.substr(slash);
  }
  if (target.empty() || target.front() != '/') return "request target must start with '/'";

  req.target = std::string(target);
  req.version = std::string(version);
  const auto q = target.find('?');
  req.path = decode(target.substr(0, q), false);
  if (q != std::string_view::npos) req.query = parse_form(target.substr(q + 1));
  return std::nullopt;
}

std::string pad(int value, int width) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%0*d", width, value);
  return buf;
}

std::string led_fragment(int index, bool on) {
  const std::string n = std::to_string(index);
  if (on) {
    return "<font color=green>ON</font> [ <a href=\"/?l" + n + "=0\">OFF</a> ]";
  }
  return "<font color=red>OFF</font> [ <a href=\"/?l" + n + "=1\">ON</a> ]";
}

std::string notes_fragment(const std::vector<std::string>& notes) {
  std::string out;
  for (const auto& n : notes) out += "<br>" + html_escape(n);
  return out;
}

std::string lcd_value(const std::string& line) {
  const auto end = line.find_last_not_of(' ');
  return html_escape(end == std::string::npos ? std::string_view{}
                                              : std::string_view(line).substr(0, end + 1));
}

}  // namespace

const std::string* HttpRequest::header(std::string_view name) const {
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) return &v;
  }
  return nullptr;
}

std::string percent_decode(std::string_view text) { return decode(text, true); }

FieldList parse_form(std::string_view text) {
  FieldList out;
  while (!text.empty()) {
    const auto amp = text.find('&');
    const std::string_view pair = text.substr(0, amp);
    if (!pair.empty()) {
      const auto eq = pair.find('=');
      if (eq == std::string_view::npos) {
        out.emplace_back(percent_decode(pair), "");
      } else {
        out.emplace_back(percent_decode(pair.substr(0, eq)), percent_decode(pair.substr(eq + 1)));
      }
    }
    if (amp == std::string_view::npos) break;
    text.remove_prefix(amp + 1);
  }
  return out;
}

ParseResult parse_request(ByteView bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  ParseResult result;

  const auto first_nl = text.find('\n');
  if (first_nl != std::string_view::npos) {
    HttpRequest probe;
    std::string_view line = text.substr(0, first_nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (auto err = check_request_line(line, probe)) return malformed(*err);
  }

  std::size_t header_end = text.find("\r\n\r\n");
  std::size_t body_start = header_end == std::string_view::npos ? header_end : header_end + 4;
  if (const auto lf = text.find("\n\n"); lf != std::string_view::npos && lf < header_end) {
    header_end = lf;
    body_start = lf + 2;
  }
  if (header_end == std::string_view::npos) {
    if (bytes.size() > kMaxRequestBytes) return malformed("request header too large");
    return result;
  }

  auto lines = split_lines(text.substr(0, header_end));
  HttpRequest& req = result.request;
  if (auto err = check_request_line(lines.front(), req)) return malformed(*err);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto colon = lines[i].find(':');
    if (colon == std::string_view::npos || colon == 0) {
      return malformed("bad header line " + std::to_string(i));
    }
    req.headers.emplace_back(std::string(trim(lines[i].substr(0, colon))),
                             std::string(trim(lines[i].substr(colon + 1))));
  }

  std::size_t content_length = 0;
  if (req.method == HttpMethod::Post) {
    if (const auto* cl = req.header("Content-Length")) {
      auto [ptr, ec] = std::from_chars(cl->data(), cl->data() + cl->size(), content_length);
      if (ec != std::errc{} || ptr != cl->data() + cl->size()) {
        return malformed("bad Content-Length");
      }
      if (content_length > kMaxRequestBytes) return malformed("request body too large");
    }
  }
  if (bytes.size() - body_start < content_length) return ParseResult{};

  req.body.assign(bytes.begin() + static_cast<std::ptrdiff_t>(body_start),
                  bytes.begin() + static_cast<std::ptrdiff_t>(body_start + content_length));
  if (req.method == HttpMethod::Post) {
    const auto* ct = req.header("Content-Type");
    if (!ct || ct->find("application/x-www-form-urlencoded") != std::string::npos) {
      req.form = parse_form(to_text(req.body));
    }
  }
  result.status = ParseStatus::Complete;
  return result;
}

CommandSet extract_commands(const HttpRequest& req) {
  CommandSet set;
  auto bad = [&](const std::string& key, const std::string& value) {
    set.errors.push_back("bad value for " + key + ": '" + value + "'");
  };

  for (const auto& [key, value] : req.query) {
    if (key == "l1" || key == "l2") {
      if (value == "0" || value == "1") {
        set.commands.emplace_back(SetLed{key == "l1" ? 1 : 2, value == "1"});
      } else {
        bad(key, value);
      }
    } else if (key == "aip" || key == "sip") {
      if (auto ip = Ipv4Address::parse(value)) {
        if (key == "aip") {
          set.commands.emplace_back(SetDeviceIp{*ip});
        } else {
          set.commands.emplace_back(SetServerIp{*ip});
        }
      } else {
        bad(key, value);
      }
    } else if (key == "lcd1" || key == "lcd2") {
      set.commands.emplace_back(WriteLcd{key == "lcd1" ? 1 : 2, value.substr(0, kLcdWidth)});
    }
  }

  if (req.method == HttpMethod::Post) {
    for (const auto& [key, value] : req.form) {
      if (key != "radio") continue;
      if (value == "0") {
        set.commands.emplace_back(SetLedMode{LedMode::Blinking});
      } else if (value == "1") {
        set.commands.emplace_back(SetLedMode{LedMode::Scanning});
      } else {
        bad(key, value);
      }
    }
  }
  return set;
}

std::optional<PageTemplate> parse_template_name(std::string_view name) {
  if (name == "appendix") return PageTemplate::Appendix;
  if (name == "postform") return PageTemplate::PostForm;
  return std::nullopt;
}

std::string html_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fill_template(std::string_view tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tpl.size() + 256);
  std::size_t pos = 0;
  while (true) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const std::string name(tpl.substr(open + 2, close - open - 2));
    const auto it = values.find(name);
    if (it == values.end()) throw std::logic_error("template marker without value: " + name);
    out.append(tpl.substr(pos, open - pos));
    out += it->second;
    pos = close + 2;
  }
  out.append(tpl.substr(pos));
  return out;
}

std::string render_homepage(const DeviceState& d, const std::vector<std::string>& notes) {
  return fill_template(templates::kAppendix,
                       {{"LED1", led_fragment(1, d.led1)},
                        {"LED2", led_fragment(2, d.led2)},
                        {"ADC", pad(d.adc_preset, 4)},
                        {"TEMP", std::to_string(d.temperature_c)},
                        {"DEVICE_IP", d.device_ip.to_string()},
                        {"SERVER_IP", d.server_ip.to_string()},
                        {"LCD1", lcd_value(d.lcd[0])},
                        {"LCD2", lcd_value(d.lcd[1])},
                        {"COUNT", pad(d.request_count, 3)},
                        {"NOTES", notes_fragment(notes)}});
}

std::string render_postform(const DeviceState& d, const std::vector<std::string>& notes) {
  const bool scanning = d.led_mode == LedMode::Scanning;
  return fill_template(templates::kPostForm,
                       {{"TEMP", std::to_string(d.temperature_c)},
                        {"BLINK_CHECKED", scanning ? "" : "checked"},
                        {"SCAN_CHECKED", scanning ? "checked" : ""},
                        {"NOTES", notes_fragment(notes)}});
}

std::string render_page(PageTemplate tpl, const DeviceState& device,
                        const std::vector<std::string>& notes) {
  return tpl == PageTemplate::PostForm ? render_postform(device, notes)
                                       : render_homepage(device, notes);
}

std::string render_bad_request(std::string_view reason) {
  return "<html><body><h1>400 Bad Request</h1>" + html_escape(reason) + "</body></html>";
}

Bytes build_response(std::string_view page, HttpStatus status) {
  std::string head;
  switch (status) {
    case HttpStatus::Ok: head = "HTTP/1.0 200 OK\r\n"; break;
    case HttpStatus::BadRequest: head = "HTTP/1.0 400 Bad Request\r\n"; break;
    case HttpStatus::NotFound: head = "HTTP/1.0 404 Not Found\r\n"; break;
  }
  head += "Content-Type: text/html\r\n\r\n";
  Bytes out = to_bytes(head);
  out.insert(out.end(), page.begin(), page.end());
  return out;
}

std::optional<HttpServer::Outcome> HttpServer::handle(ByteView assembled,
                                                      const DeviceState& device) const {
  const ParseResult parsed = parse_request(assembled);
  Outcome out;
  out.device = device;
  if (parsed.status == ParseStatus::Incomplete) return std::nullopt;
  if (parsed.status == ParseStatus::Malformed) {
    out.status = HttpStatus::BadRequest;
    out.response = build_response(render_bad_request(parsed.error), HttpStatus::BadRequest);
    return out;
  }

  const CommandSet set = extract_commands(parsed.request);
  std::vector<std::string> notes;
  for (const auto& cmd : set.commands) {
    out.device = apply(out.device, cmd);
    out.applied.push_back(cmd);
    if (const auto* ip = std::get_if<SetDeviceIp>(&cmd)) out.new_device_ip = ip->ip;
  }
  if (out.new_device_ip) {
    notes.push_back("AVR IP changes to " + out.new_device_ip->to_string() +
                    " once this page has been sent.");
  }
  for (const auto& e : set.errors) notes.push_back("Error: " + e);

  out.device = count_request(out.device);
  out.response = build_response(render_page(template_, out.device, notes), HttpStatus::Ok);
  return out;
}

}  // namespace embnet
