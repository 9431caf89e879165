#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace tjf {

inline constexpr const char* kToolVersion = "0.3.0";

struct Window {
  double begin = 0.0;
  double end = 0.0;
};

// Direction of a tolerance: most checks bound a residual from above, a few
// controls require a quantity to be at least some size.
enum class Bound { upper, lower };

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Bound bound = Bound::upper;
  bool pass = false;
  std::vector<Window> excluded;
  std::string detail;
};

// An ordered list of named numerical checks.
class ResidualReport {
 public:
  ResidualReport() = default;
  explicit ResidualReport(std::string title) : title_(std::move(title)) {}

  const std::string& title() const { return title_; }
  const std::vector<CheckResult>& checks() const { return checks_; }

  CheckResult& add(std::string name, double value, double tolerance, Bound bound = Bound::upper,
                   std::vector<Window> excluded = {}, std::string detail = {});
  void note(std::string line) { notes_.push_back(std::move(line)); }
  void append(const ResidualReport& other);
  // Replaces the tolerance of every check with this name and re-evaluates it.
  // Returns the number of checks affected.
  int set_tolerance(const std::string& name, double tolerance);

  bool passed() const;
  // Value of the named check; throws std::out_of_range when absent.
  const CheckResult& get(const std::string& name) const;
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  std::string title_;
  std::vector<CheckResult> checks_;
  std::vector<std::string> notes_;
};

// Fixed-precision rendering so that identical runs produce identical bytes.
std::string format_number(double x);

// Report file layout:
//   tool tjf <version>
//   command <name>
//   config <key> = <value>          (one per entry, in the given order)
//   section <title>
//   check <name> value=<x> <=|>= <tol> pass|FAIL [excluded=a:b,...] [detail]
//   note <text>
//   summary pass|FAIL
void write_report(std::ostream& os, const std::string& command,
                  const std::vector<std::pair<std::string, std::string>>& config,
                  const std::vector<ResidualReport>& sections);

}  // namespace tjf
