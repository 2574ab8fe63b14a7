#pragma once

#include <cstdio>
#include <string>

namespace conslab {

// shortest-ish deterministic float formatting shared by all CSV writers
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace conslab
