#include <random>

#include "doctest.h"
#include "embnet/logger.hpp"

using namespace embnet;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("log: trailing comma decides the last record") {
  const auto two = parse_log("d1|26,d2|27,");
  REQUIRE(two.size() == 2);
  CHECK(two[0] == LogRecord{"d1", "26"});
  CHECK(two[1] == LogRecord{"d2", "27"});

  const auto one = parse_log("d1|26,d2|27");
  REQUIRE(one.size() == 1);
  CHECK(one[0] == LogRecord{"d1", "26"});

  CHECK(parse_log("").empty());
  CHECK(parse_log("", LogParseMode::Strict).empty());
}

TEST_CASE("log: strict mode") {
  CHECK(parse_log("d1|26,d2|27", LogParseMode::Strict).size() == 2);
  CHECK(parse_log("d1|26,d2|27,", LogParseMode::Strict).size() == 2);
  try {
    parse_log("d1|26,oops,d3|1", LogParseMode::Strict);
    FAIL("malformed record accepted");
  } catch (const MalformedRecord& e) {
    CHECK(e.index() == 1);
  }
  CHECK_THROWS_AS(parse_log("a|b|c,", LogParseMode::Strict), MalformedRecord);
  // The original script keeps going with an empty temperature.
  CHECK(parse_log("oops,")[0] == LogRecord{"oops", ""});
}

TEST_CASE("log: table rendering") {
  const std::string empty = render_log_table({});
  CHECK(empty.find("Date & time") != std::string::npos);
  CHECK(empty.find("Temperature") != std::string::npos);
  CHECK(count(empty, "<tr>") == 1);

  const std::vector<LogRecord> one{{"d1", "26"}};
  const std::string t = render_log_table(one);
  CHECK(t.find("<td align=\"center\">d1</td><td align=\"center\">26&deg;C</td>") !=
        std::string::npos);

  std::vector<LogRecord> many(100, LogRecord{"x", "1"});
  CHECK(count(render_log_table(many), "<tr>") == 101);
}

TEST_CASE("log: faithful and strict agree on well-formed, comma-terminated input") {
  std::mt19937 rng(4);
  for (int i = 0; i < 200; ++i) {
    std::string text;
    const int n = static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) {
      text += "2010-05-0" + std::to_string(1 + rng() % 9) + " " + std::to_string(rng() % 24) +
              ":00|" + std::to_string(static_cast<int>(rng() % 60) - 10) + ",";
    }
    const auto f = parse_log(text);
    CHECK(f == parse_log(text, LogParseMode::Strict));
    CHECK(count(render_log_table(f), "<tr>") == f.size() + 1);
  }
}
