#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mltm {

inline constexpr const char* kToolVersion = "mltm 0.1.0";

// Exit codes used by the CLI; library code signals them via these exception
// families.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// FNV-1a, used to derive per-document RNG streams from string ids so results
// do not depend on document order.
inline std::uint64_t hash64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mltm
