// Line-oriented scenario scripts for the testbed.
//
//   # comment
//   ping 192.168.1.10 count=4 size=32 expect replies=4 bytes=32 ttl=128
//   get "/?l1=1" expect status=200 contains="LED1"
//
// Grammar: `verb arg... [expect key=value...]`. Values may be double-quoted;
// inside quotes \" \\ \n \r \t are escapes. See README for verbs and keys.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "embnet/harness.hpp"

namespace embnet {

class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ScenarioStep {
  std::size_t line = 0;
  std::string text;  // the source line, trimmed
  std::string verb;
  std::vector<std::string> positional;
  std::vector<std::pair<std::string, std::string>> args;
  std::vector<std::pair<std::string, std::string>> expects;
};

/// Throws ScenarioParseError for unknown verbs or keys, bad quoting, and
/// malformed arguments.
std::vector<ScenarioStep> parse_scenario(std::string_view text);

struct ScenarioReport {
  std::string text;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::vector<CapturedFrame> capture;

  bool ok() const { return failed == 0; }
};

ScenarioReport run_scenario(const std::vector<ScenarioStep>& steps, TestbedOptions opts);

}  // namespace embnet
