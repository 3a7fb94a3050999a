// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <map>
#include <string>
#include <vector>

namespace isax {

// Minimal TOML reader covering what the experiment configs need: comments,
// [section] headers (keys become "section.key"), strings, integers, floats,
// booleans and flat arrays. Values keep their source line for diagnostics.
struct TomlValue {
  enum class Kind { string, integer, number, boolean, array };
  Kind kind = Kind::string;
  std::string str;
  long integer = 0;
  double number = 0.0;
  bool boolean = false;
  std::vector<TomlValue> array;
  long line = 0;
};

class TomlTable {
 public:
  void insert(const std::string& key, TomlValue value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key) const;
  long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<long> get_int_array(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long> get_int_array(const std::string& key, std::vector<long> fallback) const;

  // Typo safety: every key must have been read through a getter.
  void require_all_consumed(const std::string& context) const;

  std::vector<std::string> keys() const;

 private:
  const TomlValue& fetch(const std::string& key) const;
  std::map<std::string, TomlValue> values_;
  mutable std::map<std::string, bool> consumed_;
};

TomlTable parse_toml(const std::string& text);
TomlTable parse_toml_file(const std::string& path);

}  // namespace isax
