#pragma once

#include <cstdio>
#include <string>

namespace roughmor {

/// Shortest round-trip-exact decimal representation ("%.17g").
inline std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// "%.4e", for messages.
inline std::string format_sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}

}  // namespace roughmor
