#include "tjf/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <regex>
#include <sstream>

namespace tjf {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool valid_key(const std::string& key) {
  static const std::regex pattern("[A-Za-z_][A-Za-z0-9_]*(\\.[A-Za-z_][A-Za-z0-9_]*)?");
  return std::regex_match(key, pattern);
}

bool to_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : Error(line > 0 ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what),
      line_(line) {}

Config Config::parse(std::istream& is, const std::string& source) {
  Config c;
  c.source_ = source;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string text = trim(raw);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (!valid_key(key))
      throw ConfigError(source, line, "invalid key '" + key + "' (at most one dotted section)");
    if (value.empty()) throw ConfigError(source, line, "empty value for '" + key + "'");
    if (c.entries_.count(key))
      throw ConfigError(source, line,
                        "duplicate key '" + key + "' (first set on line " +
                            std::to_string(c.entries_[key].line) + ")");
    c.entries_[key] = {value, line};
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, 0, "cannot open config file");
  return parse(in, path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError(source_, 0, "invalid key '" + key + "'");
  entries_[key] = {trim(value), 0};
}

void Config::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  throw ConfigError(source_, it == entries_.end() ? 0 : it->second.line, key + ": " + what);
}

std::string Config::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) fail(key, "missing required key");
  return it->second.value;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double Config::get_double(const std::string& key) const {
  double v = 0.0;
  if (!to_double(get(key), v)) fail(key, "expected a real number, got '" + get(key) + "'");
  return v;
}

double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long Config::get_int(const std::string& key) const {
  const std::string t = get(key);
  long long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    fail(key, "expected an integer, got '" + t + "'");
  return v;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!to_double(item, v)) fail(key, "expected a comma separated list of reals");
    out.push_back(v);
  }
  return out;
}

Vec Config::get_vec(const std::string& key) const {
  const auto list = get_list(key);
  if (list.size() > static_cast<std::size_t>(kMaxDim)) fail(key, "too many components");
  Vec v(static_cast<Eigen::Index>(list.size()));
  for (std::size_t i = 0; i < list.size(); ++i) v[static_cast<Eigen::Index>(i)] = list[i];
  return v;
}

Mat Config::get_matrix(const std::string& key) const {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(get(key));
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<double> entries;
    std::stringstream rs(row);
    std::string item;
    while (std::getline(rs, item, ',')) {
      double v = 0.0;
      if (!to_double(item, v)) fail(key, "expected rows of comma separated reals separated by ';'");
      entries.push_back(v);
    }
    if (!rows.empty() && entries.size() != rows.front().size())
      fail(key, "rows have different lengths");
    rows.push_back(std::move(entries));
  }
  if (rows.empty() || rows.front().empty()) fail(key, "empty matrix");
  if (rows.size() > static_cast<std::size_t>(kMaxDim) ||
      rows.front().size() > static_cast<std::size_t>(kMaxDim))
    fail(key, "matrix too large");
  Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(key, "expected true or false, got '" + v + "'");
}

std::vector<std::pair<std::string, std::string>> Config::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [k, e] : entries_) out.emplace_back(k, e.value);
  return out;
}

std::pair<std::string, double> parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("--tol", 0, "expected name=value, got '" + text + "'");
  const std::string name = trim(text.substr(0, eq));
  double v = 0.0;
  if (name.empty() || !to_double(text.substr(eq + 1), v) || !(v > 0.0))
    throw ConfigError("--tol", 0, "expected name=<positive real>, got '" + text + "'");
  return {name, v};
}

}  // namespace tjf
