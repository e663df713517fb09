#ifndef STACO_ERRORS_HPP
#define STACO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace staco {

// Malformed input text (datasets, snapshots). Carries a line number when known.
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
  parse_error(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg) {}
};

// Invalid experiment or optimizer configuration; the CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace staco

#endif  // STACO_ERRORS_HPP
