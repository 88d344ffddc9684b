#include "raredyn/config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "raredyn/errors.hpp"

namespace raredyn {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  os << msg;
  throw Error(ErrorCode::ConfigError, os.str());
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find_first_of("#;");
  // ';' starts a comment only at the beginning of a line; inside values it
  // separates matrix rows.
  if (pos == std::string::npos) return line;
  if (line[pos] == ';') {
    const auto first = line.find_first_not_of(" \t");
    if (first != pos) {
      const auto hash = line.find('#');
      return hash == std::string::npos ? line : line.substr(0, hash);
    }
  }
  return line.substr(0, pos);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) return false;
  return true;
}

}  // namespace

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_trimmed(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) fail(line_no, "invalid section name '" + section + "'");
      cfg.data_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    if (section.empty()) fail(line_no, "key outside of any [section]");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key)) fail(line_no, "invalid key '" + key + "'");
    auto& sec = cfg.data_[section];
    if (sec.count(key)) fail(line_no, "duplicate key '" + key + "' in [" + section + "]");
    sec[key] = Entry{trim(line.substr(eq + 1)), line_no};
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

bool Config::has_section(const std::string& section) const { return data_.count(section) > 0; }

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : data_) out.push_back(name);
  return out;
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto it = data_.find(section);
  return it != data_.end() && it->second.count(key) > 0;
}

const Config::Entry& Config::entry(const std::string& section, const std::string& key) const {
  const auto it = data_.find(section);
  if (it == data_.end()) fail(0, "missing section [" + section + "]");
  const auto jt = it->second.find(key);
  if (jt == it->second.end()) fail(0, "missing key '" + key + "' in [" + section + "]");
  return jt->second;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  return entry(section, key).value;
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
  const auto& e = entry(section, key);
  return parse_number(e.value, e.line);
}

double Config::get_double_or(const std::string& section, const std::string& key, double fallback) const {
  return has(section, key) ? get_double(section, key) : fallback;
}

long long Config::get_int_or(const std::string& section, const std::string& key, long long fallback) const {
  if (!has(section, key)) return fallback;
  const auto& e = entry(section, key);
  const double v = parse_number(e.value, e.line);
  if (v != static_cast<double>(static_cast<long long>(v))) fail(e.line, "expected an integer for '" + key + "'");
  return static_cast<long long>(v);
}

std::vector<std::string> Config::keys(const std::string& section) const {
  std::vector<std::string> out;
  const auto it = data_.find(section);
  if (it == data_.end()) return out;
  for (const auto& [k, _] : it->second) out.push_back(k);
  return out;
}

std::string Config::canonical() const {
  std::ostringstream os;
  for (const auto& [section, entries] : data_) {
    os << '[' << section << "]\n";
    for (const auto& [key, e] : entries) {
      std::string v;
      bool space = false;
      for (char c : e.value) {
        if (std::isspace(static_cast<unsigned char>(c))) {
          space = true;
          continue;
        }
        // Whitespace only matters between two tokens that would otherwise merge.
        if (space && !v.empty() && (std::isalnum(static_cast<unsigned char>(v.back())) || v.back() == '.') &&
            (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+'))
          v.push_back(' ');
        space = false;
        v.push_back(c);
      }
      os << key << '=' << v << '\n';
    }
  }
  return os.str();
}

double parse_number(const std::string& text, std::size_t line) {
  const std::string t = trim(text);
  if (t.empty()) fail(line, "empty number");
  const auto slash = t.find('/');
  auto parse_plain = [&](const std::string& s) {
    const std::string u = trim(s);
    if (u.empty()) fail(line, "malformed number '" + t + "'");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(u.c_str(), &end);
    if (end != u.c_str() + u.size() || errno == ERANGE) fail(line, "malformed number '" + t + "'");
    return v;
  };
  if (slash == std::string::npos) return parse_plain(t);
  const double num = parse_plain(t.substr(0, slash));
  const double den = parse_plain(t.substr(slash + 1));
  if (den == 0.0) fail(line, "zero denominator in '" + t + "'");
  return num / den;
}

std::vector<double> parse_number_list(const std::string& text, std::size_t line) {
  std::string normalized = text;
  for (char& c : normalized)
    if (c == ',') c = ' ';
  std::istringstream in(normalized);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_number(tok, line));
  return out;
}

std::vector<std::vector<double>> parse_number_rows(const std::string& text, std::size_t line) {
  std::vector<std::vector<double>> rows;
  for (const auto& part : split_trimmed(text, ';')) {
    if (part.empty()) continue;
    rows.push_back(parse_number_list(part, line));
  }
  return rows;
}

}  // namespace raredyn
