// Command-line front end: reads a flat key/value config, runs one verifier and
// writes a line-oriented report plus plot-ready CSV files.
//
// Exit status: 0 all checks pass, 1 a check failed or a numerical error
// occurred, 2 the hypotheses of the requested verification do not hold,
// 3 usage, config or precondition error.

#include "tjf/catalog.hpp"
#include "tjf/config.hpp"
#include "tjf/decomposition.hpp"
#include "tjf/foliation.hpp"
#include "tjf/geodesic.hpp"
#include "tjf/jacobi.hpp"
#include "tjf/report.hpp"
#include "tjf/suite.hpp"
#include "tjf/transversal.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace tjf;

enum Exit { kPass = 0, kFail = 1, kInapplicable = 2, kUsage = 3 };

struct Invocation {
  std::string command;
  Config config;
  std::string out;
  std::uint64_t seed = 20240611;
  double step = 1e-3;
  int jobs = 1;
  std::map<std::string, double> tolerances;
};

struct Outcome {
  std::vector<ResidualReport> sections;
  bool inapplicable = false;
};

// Destination of the report and the CSV files. Without --out the report goes
// to stdout and CSV files are not written.
class Sink {
 public:
  explicit Sink(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }
  bool files() const { return !dir_.empty(); }

  void csv(const std::string& name, const std::function<void(std::ostream&)>& write) const {
    if (!files()) return;
    std::ofstream os(path(name));
    if (!os) throw Error("cannot write " + path(name));
    write(os);
  }

  void report(const std::string& command, const std::vector<std::pair<std::string, std::string>>& echo,
              const std::vector<ResidualReport>& sections) const {
    if (!files()) {
      write_report(std::cout, command, echo, sections);
      return;
    }
    std::ofstream os(path(command + ".report"));
    if (!os) throw Error("cannot write " + path(command + ".report"));
    write_report(os, command, echo, sections);
  }

 private:
  std::string path(const std::string& name) const {
    return (std::filesystem::path(dir_) / name).string();
  }
  std::string dir_;
};

// ---------------------------------------------------------------------------
// Config helpers

ManifoldPtr config_manifold(const Config& c) {
  try {
    return parse_manifold(c.get("manifold.name"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("manifold.name", 0, e.what());
  }
}

Vec check_length(const std::string& key, const Vec& v, int expected) {
  if (v.size() != expected) {
    std::ostringstream os;
    os << key << ": expected " << expected << " components, got " << v.size();
    throw ConfigError("config", 0, os.str());
  }
  return v;
}

Vec config_point(const Config& c, const Manifold& m, const std::string& key) {
  const Vec p = check_length(key, c.get_vec(key), m.point_dim());
  if (!m.in_domain(p)) throw ConfigError("config", 0, key + ": point outside the chart domain");
  return p;
}

// Tangent vector at p, rescaled to unit length.
Vec config_unit(const Config& c, const Manifold& m, const Vec& p, const std::string& key) {
  const Vec v = check_length(key, c.get_vec(key), m.dim());
  const double len = std::sqrt(inner(m.metric(p), v, v));
  if (!(len > 0.0)) throw ConfigError("config", 0, key + ": zero vector");
  return v / len;
}

PathPtr config_path(const Invocation& run, const ManifoldPtr& m) {
  const Config& c = run.config;
  const Vec p = config_point(c, *m, "geodesic.point");
  const Vec v = config_unit(c, *m, p, "geodesic.direction");
  const double begin = c.get_double("geodesic.begin", 0.0);
  const double end = c.get_double("geodesic.end", 2.0 * M_PI);
  if (!(begin <= 0.0 && end >= 0.0 && end > begin))
    throw ConfigError("config", 0, "geodesic.begin <= 0 <= geodesic.end required");
  GeodesicOptions go;
  go.step = run.step;
  return integrate_geodesic(m, p, v, begin, end, go);
}

FoliationSpec config_foliation(const Config& c, const ManifoldPtr& m) {
  try {
    return builtin_foliation(c.get("foliation.name"), m,
                             static_cast<int>(c.get_int("foliation.leaf_factor", 0)));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("foliation.name", 0, e.what());
  }
}

// family.method = foliation | killing | explicit. Explicit families give one
// member per row of family.values / family.derivatives in bundle-frame
// coordinates (n-1 entries each).
FamilyPtr config_family(const Config& c, const PathPtr& path) {
  const std::string method = c.get("family.method", "foliation");
  if (method == "foliation") return family_from_foliation(path, config_foliation(c, path->manifold_ptr()));
  if (method == "killing") {
    const FoliationSpec fol = config_foliation(c, path->manifold_ptr());
    if (!fol.killing)
      throw ConfigError("family.method", 0, "foliation '" + fol.label + "' has no Killing generators");
    return family_from_killing(path, fol.generators);
  }
  if (method == "explicit") {
    const Mat y0 = c.get_matrix("family.values").transpose();
    const Mat yp0 = c.get_matrix("family.derivatives").transpose();
    const int r = path->manifold().dim() - 1;
    if (y0.rows() != r || yp0.rows() != r || y0.cols() != yp0.cols())
      throw ConfigError("family.values", 0,
                        "explicit rows need " + std::to_string(r) +
                            " entries and both matrices the same number of rows");
    return make_family_frame(make_bundle(path), y0, yp0);
  }
  throw ConfigError("family.method", 0, "unknown method '" + method + "' (foliation, killing, explicit)");
}

// subspace.indices = member indices, or subspace.rows = coefficient rows.
Mat config_subspace(const Config& c, int members) {
  if (c.has("subspace.rows")) {
    const Mat rows = c.get_matrix("subspace.rows");
    if (rows.cols() != members)
      throw ConfigError("subspace.rows", 0, "each row needs " + std::to_string(members) + " coefficients");
    return rows.transpose();
  }
  const auto list = c.get_list("subspace.indices");
  Mat cols = Mat::Zero(members, static_cast<Eigen::Index>(list.size()));
  for (std::size_t i = 0; i < list.size(); ++i) {
    const double v = list[i];
    if (v != std::floor(v) || v < 0 || v >= members)
      throw ConfigError("subspace.indices", 0, "index out of range 0.." + std::to_string(members - 1));
    cols(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return cols;
}

// ---------------------------------------------------------------------------
// Commands

Outcome cmd_geodesic(const Invocation& run, const Sink& sink) {
  const ManifoldPtr m = config_manifold(run.config);
  const PathPtr path = config_path(run, m);
  ResidualReport rep("geodesic");
  rep.add("geodesic.speed_deviation", speed_deviation(*path), 1e-8);
  rep.add("geodesic.ode_residual", geodesic_residual(*path), 1e-6);
  rep.note("samples " + std::to_string(path->size()) + " on [" + format_number(path->t_begin()) +
           ", " + format_number(path->t_end()) + "]");
  sink.csv("geodesic.csv", [&](std::ostream& os) { path->write_csv(os); });
  return {{rep}};
}

Outcome cmd_jacobi(const Invocation& run, const Sink& sink) {
  const ManifoldPtr m = config_manifold(run.config);
  const PathPtr path = config_path(run, m);
  const FamilyPtr family = config_family(run.config, path);
  ResidualReport rep("jacobi");
  const double scale = std::max(family->omega_scale(), 1e-300);
  rep.add("jacobi.omega_drift", family->omega_drift() / scale, 1e-8);
  rep.add("jacobi.ode_residual", family->ode_residual(), 1e-5);
  rep.note(std::string("self-adjoint: ") + (family->self_adjoint() ? "yes" : "no"));
  sink.csv("jacobi.csv", [&](std::ostream& os) { family->write_csv(os); });
  if (!family->self_adjoint() || family->members() != family->rank()) {
    rep.note("Riccati operator not exported: it needs a self-adjoint family of n-1 members");
    return {{rep}};
  }
  std::vector<RiccatiOperator> ops;
  std::size_t singular = 0;
  for (std::size_t k = 0; k < family->size(); ++k) {
    ops.push_back(riccati_at_sample(*family, k));
    singular += ops.back().singular;
  }
  rep.note("samples with singular Riccati operator: " + std::to_string(singular));
  sink.csv("riccati.csv", [&](std::ostream& os) {
    const int r = family->rank();
    os << "t";
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) os << ",L_" << i + 1 << "_" << j + 1;
    os << "\n";
    for (std::size_t k = 0; k < family->size(); ++k) {
      os << format_number(path->time(k));
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
          os << "," << (ops[k].singular ? "nan" : format_number(ops[k].matrix(i, j)));
      os << "\n";
    }
  });
  return {{rep}};
}

Outcome cmd_transversal(const Invocation& run, const Sink& sink) {
  const Config& c = run.config;
  const ManifoldPtr m = config_manifold(c);
  const PathPtr path = config_path(run, m);
  const FamilyPtr family = config_family(c, path);
  const Mat vertical = config_subspace(c, family->members());
  const SplitPtr split = build_split(make_subfamily(family, vertical));

  // Combinations outside the subspace: the given one, or a basis of the complement.
  Mat combos;
  if (c.has("subspace.combination")) {
    const Vec v = check_length("subspace.combination", c.get_vec("subspace.combination"),
                               family->members());
    combos = v;
  } else {
    combos = orthonormal_complement(orthonormal_basis(vertical), family->members());
  }
  ResidualReport main("transversal");
  for (int j = 0; j < combos.cols(); ++j) {
    ResidualReport one = transversal_report(*split, VectorXd(combos.col(j)));
    main.append(one);
  }
  std::vector<ResidualReport> sections{main, first_order_report(*split), oneill_psd_check(*split)};
  sections.front().note("windows " + std::to_string(split->windows().size()) + ", sup|A| " +
                        format_number(split->sup_a()));
  sink.csv("transversal.csv", [&](std::ostream& os) {
    os << "t,a_norm,in_window\n";
    for (std::size_t k = 0; k < split->size(); ++k)
      os << format_number(path->time(k)) << "," << format_number(split->a_full(k).norm()) << ","
         << (split->in_window(k) ? 1 : 0) << "\n";
  });
  return {sections};
}

Outcome cmd_decompose(const Invocation& run, const Sink&) {
  const Config& c = run.config;
  const ManifoldPtr m = config_manifold(c);
  const PathPtr path = config_path(run, m);
  const FamilyPtr family = config_family(c, path);
  DecompositionOptions opts;
  opts.hypothesis_seed = run.seed;
  const DecompositionReport rep = verify_decomposition(family, opts);
  ResidualReport checks = rep.checks;
  if (rep.status == DecompositionStatus::inapplicable) return {{checks}, true};
  checks.note("dim vanishing " + std::to_string(rep.dim_vanishing) + ", dim parallel " +
              std::to_string(rep.dim_parallel) + ", members " + std::to_string(family->members()));
  return {{checks}};
}

Outcome cmd_dual_leaf(const Invocation& run, const Sink& sink) {
  const Config& c = run.config;
  const ManifoldPtr m = config_manifold(c);
  const FoliationSpec fol = config_foliation(c, m);
  const Vec p = config_point(c, *m, "dual.point");
  DualLeafOptions opts;
  opts.budget = static_cast<std::size_t>(c.get_int("dual.budget", 10000));
  opts.depth = static_cast<int>(c.get_int("dual.depth", 3));
  opts.segment_length = c.get_double("dual.segment_length", M_PI);
  opts.sample_spacing = c.get_double("dual.spacing", 0.02);
  opts.step = run.step;
  const DualLeafCloud cloud = dual_leaf_trace(fol, p, opts);

  ResidualReport rep("dual leaf");
  double defect = 0.0;
  for (const auto& s : cloud.segments) defect = std::max(defect, s.defect);
  rep.add("dual_leaf.horizontality", defect, 1e-6);
  // Covering radius against a fixed net; meaningful when the dual leaf is
  // expected to fill the manifold (dual.fills = true).
  const auto net = reference_net(*m, static_cast<int>(c.get_int("dual.net", 2000)), run.seed);
  const double radius = covering_radius(*m, cloud.points, net);
  if (c.get_bool("dual.fills", true))
    rep.add("dual_leaf.covering_radius", radius, 0.05);
  else
    rep.note("covering radius " + format_number(radius));
  rep.note("segments " + std::to_string(cloud.budget_used) + ", points " +
           std::to_string(cloud.points.size()) + ", generic rank " +
           std::to_string(cloud.generic_rank) + (cloud.exhausted ? ", budget exhausted" : ""));
  sink.csv("cloud.csv", [&](std::ostream& os) { cloud.write_csv(os); });
  return {{rep}};
}

Outcome cmd_access_rank(const Invocation& run, const Sink& sink) {
  const Config& c = run.config;
  const ManifoldPtr m = config_manifold(c);
  const FoliationSpec fol = config_foliation(c, m);
  const int depth = static_cast<int>(c.get_int("access.depth", 2));
  std::vector<Vec> points;
  if (c.has("access.point")) {
    points.push_back(config_point(c, *m, "access.point"));
  } else {
    std::mt19937_64 rng(run.seed);
    const auto count = c.get_int("access.points", 100);
    for (long long i = 0; i < count; ++i) points.push_back(m->sample_point(rng));
  }
  std::vector<AccessibilityResult> results;
  for (const auto& p : points) results.push_back(accessibility_rank(fol, p, depth));

  ResidualReport rep("accessibility");
  int inconclusive = 0, lo = m->dim(), hi = 0;
  for (const auto& r : results) {
    if (!r.conclusive) ++inconclusive;
    lo = std::min(lo, r.rank);
    hi = std::max(hi, r.rank);
  }
  rep.add("access_rank.inconclusive_points", inconclusive, 0.0);
  if (c.has("access.expected")) {
    const auto expected = c.get_int("access.expected");
    const double deficit = std::max(std::abs(lo - expected), std::abs(hi - expected));
    rep.add("access_rank.deviation", deficit, 0.0, Bound::upper, {},
            "range=" + std::to_string(lo) + ".." + std::to_string(hi));
  }
  rep.note("rank range " + std::to_string(lo) + ".." + std::to_string(hi) + " over " +
           std::to_string(points.size()) + " points at depth " + std::to_string(depth));
  sink.csv("access_rank.csv", [&](std::ostream& os) {
    for (int i = 0; i < m->point_dim(); ++i) os << "x" << i + 1 << ",";
    os << "rank,rank_half_step\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (int j = 0; j < points[i].size(); ++j) os << (j ? "," : "") << format_number(points[i][j]);
      os << "," << results[i].rank << "," << results[i].rank_half_step << "\n";
    }
  });
  return {{rep}};
}

Outcome cmd_flats(const Invocation& run, const Sink&) {
  const Config& c = run.config;
  const ManifoldPtr m = config_manifold(c);
  const FoliationSpec fol = config_foliation(c, m);
  const Vec p = config_point(c, *m, "flat.point");
  FlatCheckOptions opts;
  opts.step = run.step;
  opts.extent = c.get_double("flat.extent", opts.extent);
  opts.grid = static_cast<int>(c.get_int("flat.grid", opts.grid));
  opts.angles = static_cast<int>(c.get_int("flat.angles", opts.angles));
  opts.enforce_certificate = c.get_bool("flat.certificate", true);
  const Vec x = config_unit(c, *m, p, "flat.x");
  const Vec v = config_unit(c, *m, p, "flat.v");
  return {{flat_check(fol, p, x, v, opts)}};
}

Outcome cmd_suite(const Invocation& run, const Sink&) {
  SuiteOptions opts;
  opts.seed = run.seed;
  opts.step = run.step;
  opts.jobs = run.jobs;
  opts.cases = static_cast<int>(run.config.get_int("suite.cases", opts.cases));
  opts.tolerances = run.tolerances;
  SuiteResult result = run_suite(opts);
  for (std::size_t i = 0; i < result.sections.size(); ++i)
    std::cerr << "section " << result.sections[i].title() << ": " << result.seconds[i] << " s\n";
  return {std::move(result.sections)};
}

const std::map<std::string, std::function<Outcome(const Invocation&, const Sink&)>>& commands() {
  static const std::map<std::string, std::function<Outcome(const Invocation&, const Sink&)>> table{
      {"geodesic", cmd_geodesic},       {"jacobi", cmd_jacobi},     {"transversal", cmd_transversal},
      {"decompose", cmd_decompose},     {"dual-leaf", cmd_dual_leaf}, {"access-rank", cmd_access_rank},
      {"flats", cmd_flats},             {"suite", cmd_suite}};
  return table;
}

// Config entries plus the flags that influence results; --out and --jobs are
// left out so that reports do not depend on them.
std::vector<std::pair<std::string, std::string>> echo(const Invocation& run) {
  auto out = run.config.echo();
  out.emplace_back("run.seed", std::to_string(run.seed));
  out.emplace_back("run.step", format_number(run.step));
  for (const auto& [name, value] : run.tolerances) out.emplace_back("tol:" + name, format_number(value));
  std::sort(out.begin(), out.end());
  return out;
}

int execute(const Invocation& run) {
  const Sink sink(run.out);
  Outcome outcome = commands().at(run.command)(run, sink);
  if (run.command != "suite") {
    for (const auto& [name, value] : run.tolerances) {
      int hits = 0;
      for (auto& s : outcome.sections) hits += s.set_tolerance(name, value);
      if (hits == 0 && !outcome.sections.empty())
        outcome.sections.front().note("tolerance override '" + name + "' matched no check");
    }
  }
  sink.report(run.command, echo(run), outcome.sections);

  if (outcome.inapplicable) {
    for (const auto& s : outcome.sections)
      for (const auto& n : s.notes()) std::cerr << "inapplicable: " << n << "\n";
    return kInapplicable;
  }
  bool pass = true;
  for (const auto& s : outcome.sections)
    for (const auto& chk : s.checks())
      if (!chk.pass) {
        pass = false;
        std::cerr << "FAIL " << chk.name << " value=" << format_number(chk.value)
                  << " tolerance=" << format_number(chk.tolerance) << "\n";
      }
  return pass ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of transversal Jacobi fields and dual foliations"};
  app.set_version_flag("--version", std::string("tjf ") + kToolVersion);

  std::string command, config_path, out;
  std::uint64_t seed = 20240611;
  double step = 1e-3;
  int jobs = 1;
  std::vector<std::string> tols;

  std::vector<std::string> names;
  for (const auto& [name, fn] : commands()) names.push_back(name);
  app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(names));
  app.add_option("--config", config_path, "Config file (key = value lines)")->envname("TJF_CONFIG");
  app.add_option("--out", out, "Output directory for the report and CSV files")->envname("TJF_OUT");
  auto* seed_opt = app.add_option("--seed", seed, "Seed for randomized sweeps")->envname("TJF_SEED");
  auto* step_opt = app.add_option("--step", step, "Integration step")
                       ->envname("TJF_STEP")
                       ->check(CLI::PositiveNumber);
  app.add_option("--tol", tols, "Tolerance override name=value (repeatable)")
      ->envname("TJF_TOL")
      ->delimiter(',');
  app.add_option("--jobs", jobs, "Worker threads for the suite")
      ->envname("TJF_JOBS")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  Invocation run;
  run.command = command;
  run.out = out;
  run.seed = seed;
  run.step = step;
  run.jobs = jobs;
  try {
    if (!config_path.empty()) run.config = Config::load(config_path);
    else if (command != "suite") throw ConfigError(command, 0, "--config is required");
    // Flags and environment take precedence over the config file.
    if (seed_opt->count() == 0 && run.config.has("seed"))
      run.seed = static_cast<std::uint64_t>(run.config.get_int("seed"));
    if (step_opt->count() == 0 && run.config.has("geodesic.step")) {
      run.step = run.config.get_double("geodesic.step");
      if (!(run.step > 0.0)) throw ConfigError(config_path, 0, "geodesic.step must be positive");
    }
    for (const auto& t : tols) run.tolerances[parse_assignment(t).first] = parse_assignment(t).second;
    return execute(run);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kFail;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
}
