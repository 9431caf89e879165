#pragma once

#include "tjf/linalg.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace tjf {

// A malformed config line or value. `line` is 1-based, 0 for values set
// programmatically (flags, environment).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

// Flat key/value configuration with at most one level of dotted sections:
//
//   # comment
//   manifold.name = sphere(2,1)
//   geodesic.point = 1, 0
//   seed = 7
//
// Later `set` calls override parsed values.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  // Comma separated reals.
  std::vector<double> get_list(const std::string& key) const;
  Vec get_vec(const std::string& key) const;
  // Rows separated by ';', entries by ','. All rows must have equal length.
  Mat get_matrix(const std::string& key) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // All entries in key order, for the report echo.
  std::vector<std::pair<std::string, std::string>> echo() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::string source_ = "<config>";
  std::map<std::string, Entry> entries_;
};

// Parses "name=value" as used by --tol; throws ConfigError.
std::pair<std::string, double> parse_assignment(const std::string& text);

}  // namespace tjf
