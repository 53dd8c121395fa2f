#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace qnd::detail {

/// 9 significant digits, the text precision of every numeric output.
inline std::string fmt9(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x + 0.0);  // no "-0"
  return buf;
}

/// Rounds to the value fmt9 would print, so JSON dumps carry the same digits.
inline double round9(double x) {
  if (!std::isfinite(x)) return x;
  return std::strtod(fmt9(x).c_str(), nullptr) + 0.0;
}

}  // namespace qnd::detail
