#pragma once

#include "tjf/jacobi.hpp"
#include "tjf/report.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace tjf {

struct SuiteOptions {
  std::uint64_t seed = 20240611;
  double step = 1e-3;
  int cases = 50;  // randomized cases per battery manifold
  int jobs = 1;
  std::map<std::string, double> tolerances;  // overrides by check name

  double tol(const std::string& name, double fallback) const;
};

// Runs f(0..count-1) on up to `jobs` threads. Exceptions are rethrown for the
// lowest failing index, so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& f);

// Manifolds of the randomized transversal battery, as parse_manifold specs.
const std::vector<std::string>& battery_manifolds();

// One randomized (geodesic, self-adjoint family, subspace) draw.
struct BatteryDraw {
  PathPtr path;
  FamilyPtr family;
  Mat vertical;       // coefficient columns of the subspace
  VectorXd combination;  // coefficients of J, orthogonal to `vertical`
  int rejected = 0;   // draws discarded before this one
};

// Deterministic in (manifold, rng state). Rejects geodesics that run far out
// in a stereographic chart and subspaces that come close to vanishing without
// a resolvable zero.
BatteryDraw draw_battery_case(const ManifoldPtr& m, std::mt19937_64& rng, double step,
                              double half_length = 2.0);

struct BatteryCase {
  std::string manifold;
  int index = 0;
  int vertical_dim = 0;
  int zeros = 0;
  int rejected = 0;
  double residual = 0.0;
  double control = 0.0;
  double sup_a = 0.0;
  double derivative_identity = 0.0;
  double frame_identity = 0.0;
  double frame_normal = 0.0;
  double omega_drift = 0.0;  // relative to the family's Ω scale
  std::size_t checked = 0;
};

struct Battery {
  std::vector<BatteryCase> cases;
  double seconds = 0.0;
};

Battery run_transversal_battery(const SuiteOptions& opts);

// Report sections of the acceptance suite. None of them contains wall-clock
// values, so reports are byte-identical for a fixed seed.
ResidualReport transversal_section(const Battery& battery, const SuiteOptions& opts);
ResidualReport first_order_section(const Battery& battery, const SuiteOptions& opts);
ResidualReport hopf_section(const SuiteOptions& opts);
ResidualReport decomposition_section(const SuiteOptions& opts);
ResidualReport dual_foliation_section(const SuiteOptions& opts);
ResidualReport flats_section(const SuiteOptions& opts);
ResidualReport infrastructure_section(const Battery& battery, const SuiteOptions& opts);

struct SuiteResult {
  std::vector<ResidualReport> sections;
  std::vector<double> seconds;  // per section
};

SuiteResult run_suite(const SuiteOptions& opts);

// Rendered report of a reduced suite (a few battery cases and the
// decomposition section); used to check reproducibility.
std::string reduced_suite_report(const SuiteOptions& opts);

}  // namespace tjf
