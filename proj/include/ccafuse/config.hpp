#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ccafuse {

/// INI run configuration. Keys are addressed as (section, key); environment
/// variables CCAFUSE_<SECTION>_<KEY> override file values. Relative paths
/// resolve against the directory of the config file.
class Config {
 public:
  Config() = default;

  static Config load(const std::optional<std::filesystem::path>& path);
  static Config parse(const std::string& text, const std::filesystem::path& base_dir);

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  long long get_int(const std::string& section, const std::string& key, long long fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  /// Comma-separated numbers.
  std::vector<double> get_list(const std::string& section, const std::string& key,
                               const std::vector<double>& fallback) const;
  std::filesystem::path get_path(const std::string& section, const std::string& key,
                                 const std::filesystem::path& fallback) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  /// Applies CCAFUSE_* variables from the given environment block.
  void apply_env(char** envp);

  /// Resolved configuration as INI text, sections and keys sorted.
  std::string dump() const;
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

 private:
  std::map<std::string, std::map<std::string, std::string>> values_;
  std::filesystem::path base_dir_ = ".";
};

}  // namespace ccafuse
