#pragma once

#include <map>
#include <string>
#include <vector>

namespace nco {

// Flat key-value config file with [section] headers, lowercase snake_case
// keys, '#' comments. Unknown keys are errors so typos never pass silently.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config from_file(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;

  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback) const;
  std::string require_str(const std::string& section, const std::string& key) const;
  int get_int(const std::string& section, const std::string& key, int fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  // "0:1.0,800:0.1" -> ordered (step, multiplier) pairs
  std::vector<std::pair<int, double>> get_schedule(const std::string& section,
                                                   const std::string& key) const;

  void set(const std::string& section, const std::string& key, const std::string& value);

  // Deterministic serialization of the resolved key-value map.
  std::string to_text() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  static void check_known(const std::string& section, const std::string& key, int lineno);
  std::map<std::string, std::string> values_;  // "section.key" -> value
};

}  // namespace nco
