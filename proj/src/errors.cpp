#include "geoclade/errors.hpp"

namespace geoclade {

namespace {
std::string format_parse_error(const std::string& source, std::size_t line,
                               const std::string& what) {
  std::string out = source;
  if (line > 0) out += ":" + std::to_string(line);
  out += ": " + what;
  return out;
}
}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : Error(format_parse_error(source, line, what)), line_(line) {}

}  // namespace geoclade
