#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace dpx {

// Debug tracing is opt-in via the DPX_LOG=debug environment variable.
inline bool debug_log_enabled() {
  static const bool on = [] {
    const char* v = std::getenv("DPX_LOG");
    return v != nullptr && std::string(v) == "debug";
  }();
  return on;
}

inline void log_debug(const std::string& msg) {
  if (debug_log_enabled()) {
    std::cerr << "[dpx] " << msg << "\n";
  }
}

}  // namespace dpx
