#include "rcusum/errors.hpp"

namespace rcusum {

DimensionError::DimensionError(const std::string& what, long expected, long actual)
    : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
            std::to_string(actual)),
      expected_(expected),
      actual_(actual) {}

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string out = "invalid configuration";
  for (const auto& line : v) {
    out += "\n  ";
    out += line;
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(join_lines(violations)), violations_(std::move(violations)) {}

}  // namespace rcusum
