// HTTP/1.0 control-page server: request parsing, command extraction, page
// rendering and response framing. Every response closes the connection.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "embnet/device_model.hpp"
#include "embnet/wire.hpp"

namespace embnet {

/// Requests that have not completed by this size are answered with 400.
inline constexpr std::size_t kMaxRequestBytes = 4096;

enum class HttpMethod { Get, Post };

using FieldList = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
  HttpMethod method = HttpMethod::Get;
  std::string target;  // as sent, e.g. "/?l1=1"
  std::string path;    // target up to '?', percent-decoded
  std::string version;
  FieldList query;     // in request order, decoded
  FieldList headers;   // names as sent
  Bytes body;
  FieldList form;      // decoded body of a form POST

  /// Case-insensitive header lookup.
  const std::string* header(std::string_view name) const;
};

enum class ParseStatus { Complete, Incomplete, Malformed };

struct ParseResult {
  ParseStatus status = ParseStatus::Incomplete;
  HttpRequest request;
  std::string error;
};

ParseResult parse_request(ByteView bytes);

/// application/x-www-form-urlencoded decoding: %XX escapes and '+' as space.
/// Invalid escapes are kept literally.
std::string percent_decode(std::string_view text);
FieldList parse_form(std::string_view text);

struct CommandSet {
  std::vector<ControlCommand> commands;
  std::vector<std::string> errors;
};

/// Query keys l1, l2, aip, sip, lcd1, lcd2 and POST form key radio, in
/// request order. Unknown keys are ignored; bad values are reported.
CommandSet extract_commands(const HttpRequest& req);

enum class PageTemplate { Appendix, PostForm };

std::optional<PageTemplate> parse_template_name(std::string_view name);

/// Escapes & < > and " for HTML text and attribute values.
std::string html_escape(std::string_view text);

/// Replaces each {{NAME}} marker; throws std::logic_error on unknown names.
std::string fill_template(std::string_view tpl, const std::map<std::string, std::string>& values);

/// The device status page. `notes` become extra lines at the foot of the page.
std::string render_homepage(const DeviceState& device, const std::vector<std::string>& notes = {});
/// Single-form variant with temperature readout and LED-mode radio buttons.
std::string render_postform(const DeviceState& device, const std::vector<std::string>& notes = {});
std::string render_page(PageTemplate tpl, const DeviceState& device,
                        const std::vector<std::string>& notes = {});
std::string render_bad_request(std::string_view reason);

enum class HttpStatus { Ok = 200, BadRequest = 400, NotFound = 404 };

/// "HTTP/1.0 <status>\r\nContent-Type: text/html\r\n\r\n" followed by `page`.
Bytes build_response(std::string_view page, HttpStatus status = HttpStatus::Ok);

/// Request-in, response-out glue used by the device. Stateless apart from
/// the template choice.
class HttpServer {
 public:
  struct Outcome {
    Bytes response;
    HttpStatus status = HttpStatus::Ok;
    DeviceState device;  // state after this request
    std::vector<ControlCommand> applied;
    /// Set when the request changed the device IP; the network layer adopts
    /// it once this response has been delivered.
    std::optional<Ipv4Address> new_device_ip;
  };

  explicit HttpServer(PageTemplate tpl = PageTemplate::Appendix) : template_(tpl) {}

  /// nullopt while the request is still incomplete.
  std::optional<Outcome> handle(ByteView assembled, const DeviceState& device) const;

  PageTemplate page_template() const { return template_; }

 private:
  PageTemplate template_;
};

}  // namespace embnet
