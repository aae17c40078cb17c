#pragma once

#include <cstdio>
#include <string>

namespace mfcl {

/// Shortest-safe decimal form: 17 significant digits, round-trips exactly.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace mfcl
