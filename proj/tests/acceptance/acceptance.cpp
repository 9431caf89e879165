// Runs the full acceptance battery and prints one PASS/FAIL line per
// criterion, followed by the individual checks behind it.
//
//   tjf_acceptance                      run and print
//   tjf_acceptance --write FILE         run, print and store the verdict lines
//   tjf_acceptance --check FILE KEY     report the stored verdict of one criterion

#include "tjf/report.hpp"
#include "tjf/suite.hpp"

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace {

struct Criterion {
  const char* key;
  const char* label;
};

// In the order of the sections produced by run_suite.
const std::vector<Criterion> kCriteria = {
    {"transversal_residual",
     "transversal Jacobi equation residual on the randomized battery (with control and runtime)"},
    {"first_order_identities",
     "first-order identities for the vertical derivative and the perpendicular frame"},
    {"hopf_oneill", "Hopf quotient curvature and Berger frame oracle"},
    {"decomposition", "vanishing and parallel decomposition of self-adjoint families"},
    {"dual_leaves", "dual leaf covering, Hopf accessibility rank and slice confinement"},
    {"flats", "totally geodesic flats and the curved negative control"},
    {"infrastructure", "curvature symmetries, RK4 order, Omega conservation and reproducible reports"},
};

int check_stored(const std::string& file, const std::string& key) {
  std::ifstream in(file);
  if (!in) {
    std::printf("FAIL  %s  (no stored result in %s)\n", key.c_str(), file.c_str());
    return 1;
  }
  std::string verdict, k;
  while (in >> verdict >> k) {
    std::string rest;
    std::getline(in, rest);
    if (k == key) {
      std::printf("%s  %s%s\n", verdict.c_str(), k.c_str(), rest.c_str());
      return verdict == "PASS" ? 0 : 1;
    }
  }
  std::printf("FAIL  %s  (criterion missing from %s)\n", key.c_str(), file.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::string> args(argv + 1, argv + argc);
  if (args.size() == 3 && args[0] == "--check") return check_stored(args[1], args[2]);
  std::string store;
  if (args.size() == 2 && args[0] == "--write") store = args[1];
  else if (!args.empty()) {
    std::fprintf(stderr, "usage: tjf_acceptance [--write FILE | --check FILE KEY]\n");
    return 2;
  }

  // A crashed run must not leave an earlier verdict behind.
  if (!store.empty()) std::remove(store.c_str());

  const tjf::SuiteOptions opts;
  const tjf::SuiteResult result = tjf::run_suite(opts);

  bool all = true;
  for (std::size_t i = 0; i < result.sections.size(); ++i) {
    const tjf::ResidualReport& s = result.sections[i];
    const bool pass = s.passed();
    all = all && pass;
    const std::string label = i < kCriteria.size() ? kCriteria[i].label : s.title();
    std::printf("%s  %s  [%.1f s]\n", pass ? "PASS" : "FAIL", label.c_str(), result.seconds[i]);
    for (const auto& c : s.checks())
      std::printf("      %-4s %-58s %s %s %s%s%s\n", c.pass ? "ok" : "FAIL", c.name.c_str(),
                  tjf::format_number(c.value).c_str(), c.bound == tjf::Bound::upper ? "<=" : ">=",
                  tjf::format_number(c.tolerance).c_str(), c.detail.empty() ? "" : "  ",
                  c.detail.c_str());
  }
  double total = 0.0;
  for (double s : result.seconds) total += s;
  std::printf("%s  all criteria  [%.1f s total]\n", all ? "PASS" : "FAIL", total);
  if (!store.empty()) {
    std::ofstream out(store);
    for (std::size_t i = 0; i < kCriteria.size(); ++i) {
      const bool pass = i < result.sections.size() && result.sections[i].passed();
      out << (pass ? "PASS " : "FAIL ") << kCriteria[i].key << "  " << kCriteria[i].label << "\n";
    }
    // The per-criterion tests carry the verdicts; the run itself only has to complete.
    return 0;
  }
  return all ? 0 : 1;
}
