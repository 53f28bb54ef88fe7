#pragma once

#include <cstdio>
#include <string>

namespace racerl {

// Full-precision text form; round-trips through strtod bit-exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace racerl
