#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mltm/common.hpp"

namespace mltm {

struct ConfigEntry {
  const char* key;
  const char* default_value;  // "auto" = resolved per command
  const char* doc;
};

// Flat key=value settings. Unknown keys are rejected; every key has a
// documented default. Values set later win (config file, then flags).
class RunConfig {
 public:
  static const std::vector<ConfigEntry>& registry();

  void set(const std::string& key, const std::string& value);
  void load_file(const std::string& path);
  void apply_override(const std::string& key_eq_value);  // "key=value"

  bool is_set(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key) const;  // set value or registry default
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // effective (set or default) values for the given keys, for artifact headers
  std::vector<std::pair<std::string, std::string>> echo(
      const std::vector<std::string>& keys) const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mltm
