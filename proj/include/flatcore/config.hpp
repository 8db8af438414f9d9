#pragma once

#include <map>
#include <string>
#include <vector>

namespace flatcore {

// Line-oriented configuration: `key = value` entries, optional `[section]`
// headers prefixing subsequent keys as `section.key`, `#` comments. Lookups
// record which keys were touched so unknown-key diagnostics can name the
// line they came from.
class Config {
 public:
  void set(const std::string& key, const std::string& value, int line = 0);
  bool has(const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_num(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_flag(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;

  // keys never read by any get_* call, with their source line numbers
  std::vector<std::pair<std::string, int>> untouched() const;

  const std::string& source_path() const { return path_; }

 private:
  friend Config parse_config_text(const std::string& text, const std::string& path);
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool touched = false;
  };
  std::map<std::string, Entry> kv_;
  std::string path_ = "<none>";

  const Entry* find(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

Config parse_config_text(const std::string& text, const std::string& path = "<string>");
Config parse_config_file(const std::string& path);

}  // namespace flatcore
