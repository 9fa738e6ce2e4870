#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bloch {

// Section/key-value run configuration. Sections repeat ([keyframe] blocks),
// keys repeat within a section (coefficient rows). Every entry must be
// consumed by the pipeline that runs, so typos surface as errors instead of
// silently ignored keys.

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
  mutable bool consumed = false;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;
  mutable bool consumed = false;
};

class Config {
public:
  static Config parse(const std::string& text);

  // "section.key=value": replaces the last entry with that key, appends when
  // absent; the section is created when missing.
  void set_override(const std::string& spec);

  // Last section with the name, nullptr when absent. Marks it consumed.
  const ConfigSection* find(const std::string& name) const;
  // All sections with the name, in file order. Marks them consumed.
  std::vector<const ConfigSection*> find_all(const std::string& name) const;

  // Throws config_error on the first unconsumed section or entry.
  void check_consumed() const;

  // Canonical text (parse result plus overrides) and its FNV-1a 64 hash;
  // the hash tags emitted artifacts.
  std::string canonical() const;
  std::string hash() const;

private:
  std::vector<ConfigSection> sections_;
};

// Entry getters; every accessor marks the entry consumed. Missing keys
// throw config_error naming section and key unless a default is supplied.
bool has_key(const ConfigSection& s, const std::string& key);
std::string get_string(const ConfigSection& s, const std::string& key);
std::string get_string(const ConfigSection& s, const std::string& key,
                       const std::string& fallback);
// Numbers accept plain literals and fractions ("1/16").
double get_double(const ConfigSection& s, const std::string& key);
double get_double(const ConfigSection& s, const std::string& key, double fallback);
int get_int(const ConfigSection& s, const std::string& key);
int get_int(const ConfigSection& s, const std::string& key, int fallback);
bool get_bool(const ConfigSection& s, const std::string& key, bool fallback);
// Whitespace-separated lists.
std::vector<double> get_double_list(const ConfigSection& s, const std::string& key);
std::vector<int> get_int_list(const ConfigSection& s, const std::string& key);
// All values under a repeated key, file order.
std::vector<const ConfigEntry*> get_rows(const ConfigSection& s, const std::string& key);

// Parses one whitespace-separated numeric row (fractions allowed); context
// names the row in errors.
std::vector<double> parse_numbers(const std::string& text, const std::string& context);

}  // namespace bloch
