#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace gx {

// Bad user input (CLI flags, config files, malformed map text).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Failure while doing otherwise-valid work (I/O, numerics blowing up).
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest round-trippable decimal form of a double. Used everywhere we
// serialize floats so identical runs produce identical bytes.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace gx
