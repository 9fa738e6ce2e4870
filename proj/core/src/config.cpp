#include "bloch/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "bloch/errors.hpp"

namespace bloch {
namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string line_tag(int line) { return "line " + std::to_string(line) + ": "; }

double parse_number(const std::string& tok, const std::string& context) {
  auto bad = [&]() {
    throw config_error(context + ": '" + tok + "' is not a number");
  };
  size_t slash = tok.find('/');
  if (slash != std::string::npos) {
    if (slash == 0 || slash + 1 >= tok.size()) bad();
    double num = parse_number(tok.substr(0, slash), context);
    double den = parse_number(tok.substr(slash + 1), context);
    if (den == 0.0) throw config_error(context + ": division by zero in '" + tok + "'");
    return num / den;
  }
  try {
    size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) bad();
    return v;
  } catch (const config_error&) {
    throw;
  } catch (const std::exception&) {
    bad();
  }
  return 0.0;  // unreachable
}

const ConfigEntry* last_entry(const ConfigSection& s, const std::string& key) {
  const ConfigEntry* found = nullptr;
  for (const auto& e : s.entries)
    if (e.key == key) found = &e;
  if (found) found->consumed = true;
  return found;
}

const ConfigEntry& require_entry(const ConfigSection& s, const std::string& key) {
  const ConfigEntry* e = last_entry(s, key);
  if (!e)
    throw config_error("missing key '" + key + "' in [" + s.name + "]");
  return *e;
}

std::string entry_context(const ConfigSection& s, const ConfigEntry& e) {
  return line_tag(e.line) + "[" + s.name + "] " + e.key;
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  ConfigSection* current = nullptr;
  while (std::getline(in, raw)) {
    ++line;
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw config_error(line_tag(line) + "section header missing ']'");
      std::string name = trim(s.substr(1, s.size() - 2));
      if (name.empty()) throw config_error(line_tag(line) + "empty section name");
      cfg.sections_.push_back(ConfigSection{name, line, {}, false});
      current = &cfg.sections_.back();
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw config_error(line_tag(line) + "expected 'key = value'");
    if (!current)
      throw config_error(line_tag(line) + "entry before any [section]");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw config_error(line_tag(line) + "empty key");
    current->entries.push_back(ConfigEntry{key, value, line, false});
  }
  return cfg;
}

void Config::set_override(const std::string& spec) {
  size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw config_error("override '" + spec + "' must look like section.key=value");
  std::string target = trim(spec.substr(0, eq));
  std::string value = trim(spec.substr(eq + 1));
  size_t dot = target.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 >= target.size())
    throw config_error("override '" + spec + "' must look like section.key=value");
  std::string sec = target.substr(0, dot);
  std::string key = target.substr(dot + 1);

  ConfigSection* section = nullptr;
  for (auto& s : sections_)
    if (s.name == sec) section = &s;
  if (!section) {
    sections_.push_back(ConfigSection{sec, 0, {}, false});
    section = &sections_.back();
  }
  ConfigEntry* entry = nullptr;
  for (auto& e : section->entries)
    if (e.key == key) entry = &e;
  if (entry)
    entry->value = value;
  else
    section->entries.push_back(ConfigEntry{key, value, 0, false});
}

const ConfigSection* Config::find(const std::string& name) const {
  const ConfigSection* found = nullptr;
  for (const auto& s : sections_)
    if (s.name == name) found = &s;
  if (found) found->consumed = true;
  return found;
}

std::vector<const ConfigSection*> Config::find_all(const std::string& name) const {
  std::vector<const ConfigSection*> out;
  for (const auto& s : sections_)
    if (s.name == name) {
      s.consumed = true;
      out.push_back(&s);
    }
  return out;
}

void Config::check_consumed() const {
  for (const auto& s : sections_) {
    if (!s.consumed)
      throw config_error(line_tag(s.line) + "unknown section [" + s.name + "]");
    for (const auto& e : s.entries)
      if (!e.consumed)
        throw config_error(line_tag(e.line) + "unknown key '" + e.key + "' in [" +
                           s.name + "]");
  }
}

std::string Config::canonical() const {
  std::ostringstream o;
  for (const auto& s : sections_) {
    o << '[' << s.name << "]\n";
    for (const auto& e : s.entries) o << e.key << '=' << e.value << '\n';
  }
  return o.str();
}

std::string Config::hash() const {
  // FNV-1a, 64-bit.
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

bool has_key(const ConfigSection& s, const std::string& key) {
  for (const auto& e : s.entries)
    if (e.key == key) return true;
  return false;
}

std::string get_string(const ConfigSection& s, const std::string& key) {
  return require_entry(s, key).value;
}

std::string get_string(const ConfigSection& s, const std::string& key,
                       const std::string& fallback) {
  const ConfigEntry* e = last_entry(s, key);
  return e ? e->value : fallback;
}

double get_double(const ConfigSection& s, const std::string& key) {
  const ConfigEntry& e = require_entry(s, key);
  return parse_number(e.value, entry_context(s, e));
}

double get_double(const ConfigSection& s, const std::string& key, double fallback) {
  const ConfigEntry* e = last_entry(s, key);
  return e ? parse_number(e->value, entry_context(s, *e)) : fallback;
}

int get_int(const ConfigSection& s, const std::string& key) {
  const ConfigEntry& e = require_entry(s, key);
  double v = parse_number(e.value, entry_context(s, e));
  int i = static_cast<int>(std::lround(v));
  if (v != static_cast<double>(i))
    throw config_error(entry_context(s, e) + ": expected an integer");
  return i;
}

int get_int(const ConfigSection& s, const std::string& key, int fallback) {
  return has_key(s, key) ? get_int(s, key) : fallback;
}

bool get_bool(const ConfigSection& s, const std::string& key, bool fallback) {
  const ConfigEntry* e = last_entry(s, key);
  if (!e) return fallback;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw config_error(entry_context(s, *e) + ": expected a boolean");
}

std::vector<double> parse_numbers(const std::string& text, const std::string& context) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(parse_number(tok, context));
  return out;
}

std::vector<double> get_double_list(const ConfigSection& s, const std::string& key) {
  const ConfigEntry& e = require_entry(s, key);
  return parse_numbers(e.value, entry_context(s, e));
}

std::vector<int> get_int_list(const ConfigSection& s, const std::string& key) {
  const ConfigEntry& e = require_entry(s, key);
  std::vector<double> v = parse_numbers(e.value, entry_context(s, e));
  std::vector<int> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<int>(std::lround(v[i]));
    if (v[i] != static_cast<double>(out[i]))
      throw config_error(entry_context(s, e) + ": expected integers");
  }
  return out;
}

std::vector<const ConfigEntry*> get_rows(const ConfigSection& s, const std::string& key) {
  std::vector<const ConfigEntry*> out;
  for (const auto& e : s.entries)
    if (e.key == key) {
      e.consumed = true;
      out.push_back(&e);
    }
  return out;
}

}  // namespace bloch
