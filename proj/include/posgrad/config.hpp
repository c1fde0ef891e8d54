#pragma once

// Flat key=value configuration files: one assignment per line, '#' starts a
// comment, blank lines ignored, whitespace around keys and values trimmed.
// Parsing into typed values reports the offending key in every error.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace posgrad {

struct ConfigEntry {
  std::string key, value;
  std::size_t line = 0;
};

inline std::vector<ConfigEntry> parse_config_text(const std::string& text,
                                                  const std::string& origin) {
  std::vector<ConfigEntry> entries;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const auto trim = [](std::string s) {
      const std::size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const std::size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                               ": expected key=value");
    ConfigEntry e;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = line_no;
    if (e.key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(line_no) + ": empty key");
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::vector<ConfigEntry> parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_text(text, path);
}

// ---- typed value parsers ----------------------------------------------------

[[noreturn]] inline void config_value_error(const std::string& key, const std::string& value,
                                            const char* expected) {
  throw std::runtime_error("config key \"" + key + "\": cannot parse \"" + value +
                           "\" as " + expected);
}

inline double config_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size())
    config_value_error(key, value, "a number");
  return v;
}

inline std::uint64_t config_u64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size() || value[0] == '-')
    config_value_error(key, value, "a non-negative integer");
  return v;
}

inline bool config_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  config_value_error(key, value, "true or false");
}

inline std::vector<std::string> config_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (begin <= value.size()) {
    std::size_t end = value.find(',', begin);
    if (end == std::string::npos) end = value.size();
    std::string item = value.substr(begin, end - begin);
    const std::size_t a = item.find_first_not_of(" \t");
    if (a == std::string::npos) {
      item.clear();
    } else {
      const std::size_t b = item.find_last_not_of(" \t");
      item = item.substr(a, b - a + 1);
    }
    if (!item.empty()) out.push_back(std::move(item));
    begin = end + 1;
  }
  return out;
}

inline std::vector<std::uint64_t> config_u64_list(const std::string& key,
                                                  const std::string& value) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : config_list(value)) out.push_back(config_u64(key, item));
  return out;
}

inline std::vector<std::size_t> config_size_list(const std::string& key,
                                                 const std::string& value) {
  std::vector<std::size_t> out;
  for (const std::string& item : config_list(value)) {
    out.push_back(static_cast<std::size_t>(config_u64(key, item)));
  }
  return out;
}

inline std::vector<double> config_double_list(const std::string& key,
                                              const std::string& value) {
  std::vector<double> out;
  for (const std::string& item : config_list(value)) out.push_back(config_double(key, item));
  return out;
}

}  // namespace posgrad
