#pragma once

#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace abdoshape::detail {

/// Shortest-safe decimal form: parses back to the same double.
inline std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return ss.str();
}

}  // namespace abdoshape::detail
