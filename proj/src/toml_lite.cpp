// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/toml_lite.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "isax/error.hpp"

namespace isax {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void fail(long line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

// Strips a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

TomlValue parse_scalar(const std::string& raw, long line) {
  TomlValue v;
  v.line = line;
  const std::string s = trim(raw);
  if (s.empty()) fail(line, "missing value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') fail(line, "unterminated string");
    v.kind = TomlValue::Kind::string;
    v.str = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = TomlValue::Kind::boolean;
    v.boolean = (s == "true");
    return v;
  }
  // Integer if it parses fully without '.', 'e' or 'E'.
  if (s.find_first_of(".eE") == std::string::npos) {
    try {
      std::size_t used = 0;
      long iv = std::stol(s, &used);
      if (used == s.size()) {
        v.kind = TomlValue::Kind::integer;
        v.integer = iv;
        v.number = static_cast<double>(iv);
        return v;
      }
    } catch (...) {
    }
  }
  try {
    std::size_t used = 0;
    double dv = std::stod(s, &used);
    if (used == s.size()) {
      v.kind = TomlValue::Kind::number;
      v.number = dv;
      return v;
    }
  } catch (...) {
  }
  fail(line, "cannot parse value '" + s + "'");
}

TomlValue parse_value(const std::string& raw, long line) {
  const std::string s = trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') fail(line, "unterminated array");
    TomlValue v;
    v.kind = TomlValue::Kind::array;
    v.line = line;
    std::string body = s.substr(1, s.size() - 2);
    std::string item;
    bool in_string = false;
    for (char c : body) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(item).empty()) v.array.push_back(parse_scalar(item, line));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!trim(item).empty()) v.array.push_back(parse_scalar(item, line));
    return v;
  }
  return parse_scalar(s, line);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      return false;
  return true;
}

}  // namespace

void TomlTable::insert(const std::string& key, TomlValue value) {
  if (values_.count(key))
    fail(value.line, "duplicate key '" + key + "'");
  values_.emplace(key, std::move(value));
}

bool TomlTable::has(const std::string& key) const {
  if (auto it = values_.find(key); it != values_.end()) {
    consumed_[key] = true;
    return true;
  }
  return false;
}

const TomlValue& TomlTable::fetch(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
  consumed_[key] = true;
  return it->second;
}

std::string TomlTable::get_string(const std::string& key) const {
  const TomlValue& v = fetch(key);
  if (v.kind != TomlValue::Kind::string)
    fail(v.line, "key '" + key + "' must be a string");
  return v.str;
}

long TomlTable::get_int(const std::string& key) const {
  const TomlValue& v = fetch(key);
  if (v.kind != TomlValue::Kind::integer)
    fail(v.line, "key '" + key + "' must be an integer");
  return v.integer;
}

double TomlTable::get_double(const std::string& key) const {
  const TomlValue& v = fetch(key);
  if (v.kind != TomlValue::Kind::number && v.kind != TomlValue::Kind::integer)
    fail(v.line, "key '" + key + "' must be a number");
  return v.number;
}

bool TomlTable::get_bool(const std::string& key) const {
  const TomlValue& v = fetch(key);
  if (v.kind != TomlValue::Kind::boolean)
    fail(v.line, "key '" + key + "' must be true or false");
  return v.boolean;
}

std::vector<long> TomlTable::get_int_array(const std::string& key) const {
  const TomlValue& v = fetch(key);
  if (v.kind != TomlValue::Kind::array)
    fail(v.line, "key '" + key + "' must be an array");
  std::vector<long> out;
  for (const TomlValue& e : v.array) {
    if (e.kind != TomlValue::Kind::integer)
      fail(v.line, "key '" + key + "' must contain integers");
    out.push_back(e.integer);
  }
  return out;
}

std::string TomlTable::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}
long TomlTable::get_int(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}
double TomlTable::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
bool TomlTable::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}
std::vector<long> TomlTable::get_int_array(const std::string& key,
                                           std::vector<long> fallback) const {
  return has(key) ? get_int_array(key) : fallback;
}

void TomlTable::require_all_consumed(const std::string& context) const {
  std::string unknown;
  for (const auto& [key, value] : values_) {
    if (!consumed_.count(key) || !consumed_.at(key)) {
      if (!unknown.empty()) unknown += ", ";
      unknown += "'" + key + "' (line " + std::to_string(value.line) + ")";
    }
  }
  if (!unknown.empty())
    throw ConfigError(context + ": unknown keys " + unknown);
}

std::vector<std::string> TomlTable::keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) out.push_back(key);
  return out;
}

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  long lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) fail(lineno, "bad section name '" + section + "'");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) fail(lineno, "bad key '" + key + "'");
    if (!section.empty()) key = section + "." + key;
    table.insert(key, parse_value(line.substr(eq + 1), lineno));
  }
  return table;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_toml(text);
}

}  // namespace isax
