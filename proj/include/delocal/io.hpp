#pragma once

#include <cstdio>
#include <string>

namespace delocal {

/// Round-trip decimal form used in every CSV payload.
inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace delocal
