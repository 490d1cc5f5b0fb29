#pragma once

#include <cstdio>
#include <string>

namespace morphkit::numfmt {

/// printf-style %.17g; round-trips every double.
inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace morphkit::numfmt
