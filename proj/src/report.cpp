#include "tjf/report.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace tjf {

CheckResult& ResidualReport::add(std::string name, double value, double tolerance, Bound bound,
                                 std::vector<Window> excluded, std::string detail) {
  CheckResult c;
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tolerance;
  c.bound = bound;
  // NaN never passes in either direction.
  c.pass = bound == Bound::upper ? value <= tolerance : value >= tolerance;
  c.excluded = std::move(excluded);
  c.detail = std::move(detail);
  checks_.push_back(std::move(c));
  return checks_.back();
}

int ResidualReport::set_tolerance(const std::string& name, double tolerance) {
  int hits = 0;
  for (auto& c : checks_)
    if (c.name == name) {
      c.tolerance = tolerance;
      c.pass = c.bound == Bound::upper ? c.value <= tolerance : c.value >= tolerance;
      ++hits;
    }
  return hits;
}

void ResidualReport::append(const ResidualReport& other) {
  checks_.insert(checks_.end(), other.checks_.begin(), other.checks_.end());
  notes_.insert(notes_.end(), other.notes_.begin(), other.notes_.end());
}

bool ResidualReport::passed() const {
  for (const auto& c : checks_)
    if (!c.pass) return false;
  return true;
}

const CheckResult& ResidualReport::get(const std::string& name) const {
  for (const auto& c : checks_)
    if (c.name == name) return c;
  throw std::out_of_range("no check named '" + name + "' in report '" + title_ + "'");
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6e", x == 0.0 ? 0.0 : x);
  return buf;
}

void write_report(std::ostream& os, const std::string& command,
                  const std::vector<std::pair<std::string, std::string>>& config,
                  const std::vector<ResidualReport>& sections) {
  os << "tool tjf " << kToolVersion << "\n";
  os << "command " << command << "\n";
  for (const auto& [k, v] : config) os << "config " << k << " = " << v << "\n";
  bool all = true;
  for (const auto& s : sections) {
    os << "section " << s.title() << "\n";
    for (const auto& c : s.checks()) {
      os << "check " << c.name << " value=" << format_number(c.value)
         << (c.bound == Bound::upper ? " <= " : " >= ") << format_number(c.tolerance)
         << (c.pass ? " pass" : " FAIL");
      if (!c.excluded.empty()) {
        os << " excluded=";
        for (std::size_t i = 0; i < c.excluded.size(); ++i)
          os << (i ? "," : "") << format_number(c.excluded[i].begin) << ":"
             << format_number(c.excluded[i].end);
      }
      if (!c.detail.empty()) os << " " << c.detail;
      os << "\n";
      all = all && c.pass;
    }
    for (const auto& n : s.notes()) os << "note " << n << "\n";
  }
  os << "summary " << (all ? "pass" : "FAIL") << "\n";
}

}  // namespace tjf
