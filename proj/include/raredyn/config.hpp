#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace raredyn {

// Plain-text key/value configuration with [section] headers.
//
//   # comment            ; comment
//   [chain]
//   states = a, b, c
//   matrix = 1 0 0; 1/2 1/2 0; 0 1 0
//
// Keys are unique within a section, values run to end of line (trailing
// comments allowed after '#'). Parse errors carry the 1-based line number.
class Config {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has_section(const std::string& section) const;
  std::vector<std::string> sections() const;
  bool has(const std::string& section, const std::string& key) const;
  const Entry& entry(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key) const;
  double get_double_or(const std::string& section, const std::string& key, double fallback) const;
  long long get_int_or(const std::string& section, const std::string& key, long long fallback) const;
  std::vector<std::string> keys(const std::string& section) const;

  // Whitespace- and comment-insensitive form used for content hashing.
  std::string canonical() const;

 private:
  std::map<std::string, std::map<std::string, Entry>> data_;
};

// Number with optional fraction syntax ("0.25", "1/4", "-3e-2"). Throws
// ConfigError with `line` in the message on failure.
double parse_number(const std::string& text, std::size_t line = 0);
// Comma or whitespace separated numbers.
std::vector<double> parse_number_list(const std::string& text, std::size_t line = 0);
// Rows separated by ';', entries by ',' or whitespace.
std::vector<std::vector<double>> parse_number_rows(const std::string& text, std::size_t line = 0);
std::vector<std::string> split_trimmed(const std::string& text, char sep);
std::string trim(const std::string& s);

}  // namespace raredyn
