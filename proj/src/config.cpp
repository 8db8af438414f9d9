#include "flatcore/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace flatcore {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '.' && c != '-')
      return false;
  return true;
}

}  // namespace

void Config::set(const std::string& key, const std::string& value, int line) {
  kv_[key] = Entry{value, line, false};
}

bool Config::has(const std::string& key) const { return kv_.count(key) != 0; }

const Config::Entry* Config::find(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return nullptr;
  it->second.touched = true;
  return &it->second;
}

void Config::fail(const std::string& key, const std::string& what) const {
  const auto it = kv_.find(key);
  std::ostringstream os;
  os << path_ << ":" << (it != kv_.end() ? it->second.line : 0) << ": key '" << key << "' " << what;
  throw std::runtime_error(os.str());
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double Config::get_num(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  char* end = nullptr;
  const double v = std::strtod(e->value.c_str(), &end);
  if (end == e->value.c_str() || *end != '\0') fail(key, "is not a number: '" + e->value + "'");
  return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  char* end = nullptr;
  const long long v = std::strtoll(e->value.c_str(), &end, 10);
  if (end == e->value.c_str() || *end != '\0') fail(key, "is not an integer: '" + e->value + "'");
  return v;
}

bool Config::get_flag(const std::string& key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no") return false;
  fail(key, "is not a boolean: '" + e->value + "'");
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  std::stringstream ss(e->value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) fail(key, "has an empty list element");
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0') fail(key, "has a non-numeric element: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(key, "is an empty list");
  return out;
}

std::vector<std::pair<std::string, int>> Config::untouched() const {
  std::vector<std::pair<std::string, int>> out;
  for (const auto& [k, e] : kv_)
    if (!e.touched) out.emplace_back(k, e.line);
  return out;
}

Config parse_config_text(const std::string& text, const std::string& path) {
  Config cfg;
  cfg.path_ = path;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!valid_key(section))
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad section name '" +
                                 section + "'");
      continue;
    }
    const size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 'key = value', got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (!valid_key(key))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad key '" + key + "'");
    if (!section.empty()) key = section + "." + key;
    cfg.set(key, value, lineno);
  }
  return cfg;
}

Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

}  // namespace flatcore
