#pragma once

#include <cstdio>
#include <string>

namespace ura {

/// 17 significant digits: enough for any double to read back bit-exact.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace ura
