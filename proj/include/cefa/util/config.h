// include/cefa/util/config.h

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CEFA_UTIL_CONFIG_H_
#define CEFA_UTIL_CONFIG_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cefa {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Flat key-value configuration. Every key has a registered default; reading
// an unknown key is an error, as is parsing a file that sets one.
class Config {
 public:
  Config();

  // Parses "key = value" lines; '#' starts a comment.
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  // Applies a named preset on top of the current values.
  void apply_preset(const std::string& preset);
  static std::vector<std::string> preset_names();

  // Hash over the keys that determine tensor shapes; checkpoints refuse to
  // load when it differs.
  uint64_t architecture_fingerprint() const;

  std::string to_string() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cefa

#endif  // CEFA_UTIL_CONFIG_H_
