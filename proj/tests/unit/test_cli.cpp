// End-to-end runs of the command-line tool.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string err;
};

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("tjf_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

Run tjf(const std::string& args, const std::string& env = "") {
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = env + " " + TJF_CLI_PATH + " " + args + " > " +
                          (scratch() / "stdout.txt").string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = slurp(err);
  return r;
}

const char* kHopf =
    "manifold.name = berger_sphere(1)\n"
    "geodesic.point = 1, 0, 0, 0\n"
    "geodesic.direction = 0, 1, 0\n"
    "geodesic.begin = -1\n"
    "geodesic.end = 1\n"
    "family.method = killing\n"
    "foliation.name = hopf_on_s3\n"
    "subspace.indices = 0\n";

}  // namespace

TEST_CASE("usage errors exit with status 3") {
  CHECK(tjf("").status == 3);
  CHECK(tjf("frobnicate").status == 3);
  CHECK(tjf("geodesic").status == 3);  // --config missing
  CHECK(tjf("geodesic --config /nonexistent.cfg").status == 3);
  const auto bad = write_config("bad.cfg", "manifold.name = sphere(2,1)\ngeodesic.point = 1, x\n");
  const Run r = tjf("geodesic --config " + bad.string() +
                    " --step 1e-3");
  CHECK(r.status == 3);
  CHECK(r.err.find("bad.cfg:2:") != std::string::npos);
  CHECK(tjf("geodesic --config " + bad.string() + " --tol x=-1").status == 3);
}

TEST_CASE("geodesic export is byte-reproducible") {
  const auto cfg = write_config("geo.cfg",
                                "manifold.name = sphere(2,1)\n"
                                "geodesic.point = 1, 0\n"
                                "geodesic.direction = 0, 2\n"
                                "geodesic.end = 3\n");
  const fs::path a = scratch() / "geo_a", b = scratch() / "geo_b";
  REQUIRE(tjf("geodesic --config " + cfg.string() + " --out " + a.string()).status == 0);
  REQUIRE(tjf("geodesic --config " + cfg.string() + " --out " + b.string()).status == 0);
  const std::string report = slurp(a / "geodesic.report");
  CHECK(report.rfind("tool tjf ", 0) == 0);
  CHECK(report.find("config manifold.name = sphere(2,1)") != std::string::npos);
  CHECK(report.find("summary pass") != std::string::npos);
  CHECK(report == slurp(b / "geodesic.report"));
  CHECK(slurp(a / "geodesic.csv") == slurp(b / "geodesic.csv"));
  CHECK(slurp(a / "geodesic.csv").size() > 1000);
}

TEST_CASE("transversal on the Hopf fibration passes") {
  const auto cfg = write_config("hopf.cfg", kHopf);
  const fs::path out = scratch() / "hopf";
  const Run r = tjf("transversal --config " + cfg.string() + " --out " + out.string());
  CHECK(r.status == 0);
  const std::string report = slurp(out / "transversal.report");
  CHECK(report.find("check transversal.residual") != std::string::npos);
  CHECK(report.find("check first_order.frame_derivative") != std::string::npos);
  CHECK(report.find("check oneill.min_eigenvalue") != std::string::npos);
  CHECK(fs::exists(out / "transversal.csv"));
}

TEST_CASE("tightened tolerances turn a pass into a failure") {
  const auto cfg = write_config("hopf_tol.cfg", kHopf);
  CHECK(tjf("transversal --config " + cfg.string() + " --tol transversal.residual=1e-30").status == 1);
  CHECK(tjf("transversal --config " + cfg.string(), "TJF_TOL=transversal.residual=1e-30").status == 1);
}

TEST_CASE("a non-self-adjoint explicit family names the offending Omega entry") {
  const auto cfg = write_config("nsa.cfg",
                                "manifold.name = sphere(3,1)\n"
                                "geodesic.point = 1, 0, 0\n"
                                "geodesic.direction = 0, 1, 0\n"
                                "geodesic.end = 1\n"
                                "family.method = explicit\n"
                                "family.values = 1, 0; 0, 1\n"
                                "family.derivatives = 0, 0; 1, 0\n"
                                "subspace.indices = 0\n");
  const Run r = tjf("transversal --config " + cfg.string());
  CHECK(r.status == 3);
  CHECK(r.err.find("Omega(") != std::string::npos);
}

TEST_CASE("decompose on a negatively curved metric is inapplicable") {
  const auto cfg = write_config("hyp.cfg",
                                "manifold.name = hyperbolic(2,1)\n"
                                "geodesic.point = 0, 0\n"
                                "geodesic.direction = 1, 0\n"
                                "geodesic.begin = -1\n"
                                "geodesic.end = 1\n"
                                "family.method = explicit\n"
                                "family.values = 1\n"
                                "family.derivatives = 0\n");
  const fs::path out = scratch() / "hyp";
  const Run r = tjf("decompose --config " + cfg.string() + " --out " + out.string());
  CHECK(r.status == 2);
  CHECK(slurp(out / "decompose.report").find("hypothesis failure: negative curvature") !=
        std::string::npos);
}

TEST_CASE("access-rank on the Hopf fibration") {
  const auto cfg = write_config("acc.cfg",
                                "manifold.name = berger_sphere(0.8)\n"
                                "foliation.name = hopf_on_s3\n"
                                "access.points = 5\n"
                                "access.expected = 3\n");
  CHECK(tjf("access-rank --config " + cfg.string()).status == 0);
  const std::string report = slurp(scratch() / "stdout.txt");
  CHECK(report.find("check access_rank.deviation value=0.000000e+00") != std::string::npos);
}

TEST_CASE("seed and step from the environment are echoed") {
  const auto cfg = write_config("env.cfg",
                                "manifold.name = euclidean(2)\n"
                                "geodesic.point = 0, 0\n"
                                "geodesic.direction = 1, 0\n"
                                "geodesic.end = 1\n");
  CHECK(tjf("geodesic --config " + cfg.string(), "TJF_SEED=99 TJF_STEP=0.01").status == 0);
  const std::string report = slurp(scratch() / "stdout.txt");
  CHECK(report.find("config run.seed = 99") != std::string::npos);
  CHECK(report.find("config run.step = 1.000000e-02") != std::string::npos);
}
