#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace mazerl {

// Flat `key = value` files; '#' starts a comment. Keys are free-form; the
// consumers document which ones they read.
class Config {
 public:
  Config() = default;
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// FNV-1a over the canonical key=value listing; stamped into reports so a
// result file names the configuration that produced it.
std::string config_hash(const Config& cfg);
std::string config_hash(const std::string& canonical_text);

}  // namespace mazerl
