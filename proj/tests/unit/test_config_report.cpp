#include "tjf/config.hpp"
#include "tjf/report.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

using namespace tjf;

namespace {

Config parse(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is, "test.cfg");
}

std::string parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = parse(
      "# comment\n"
      "manifold.name = product(sphere(2,1),euclidean(1))\n"
      "\n"
      "geodesic.point = 1, 0 ,0\n"
      "seed=7\n"
      "subspace.rows = 1,0; 0,1\n"
      "flag = no\n");
  CHECK(c.get("manifold.name") == "product(sphere(2,1),euclidean(1))");
  CHECK(c.get_int("seed") == 7);
  CHECK(c.get_vec("geodesic.point").size() == 3);
  CHECK(c.get_double("geodesic.begin", -2.5) == -2.5);
  const Mat rows = c.get_matrix("subspace.rows");
  CHECK(rows.rows() == 2);
  CHECK(rows(1, 1) == 1.0);
  CHECK_FALSE(c.get_bool("flag", true));
  const auto echo = c.echo();
  REQUIRE(echo.size() == 5);
  CHECK(echo.front().first == "flag");  // key order
}

TEST_CASE("config errors carry the source position") {
  CHECK(parse_error("a = 1\nnot a pair\n") == "test.cfg:2: expected 'key = value'");
  CHECK(parse_error("a.b.c = 1\n").rfind("test.cfg:1: invalid key", 0) == 0);
  CHECK(parse_error("a =\n").rfind("test.cfg:1: empty value", 0) == 0);
  const std::string dup = parse_error("a = 1\n# x\na = 2\n");
  CHECK(dup.rfind("test.cfg:3: duplicate key 'a'", 0) == 0);
  CHECK(dup.find("line 1") != std::string::npos);

  const Config c = parse("x = 1.5\ny = abc\nz = 1,,2\nm = 1,2;3\n");
  CHECK_THROWS_WITH_AS(c.get_double("y"), "test.cfg:2: y: expected a real number, got 'abc'",
                       ConfigError);
  CHECK_THROWS_AS(c.get_int("x"), ConfigError);
  CHECK_THROWS_AS(c.get_list("z"), ConfigError);
  CHECK_THROWS_AS(c.get_matrix("m"), ConfigError);
  CHECK_THROWS_WITH_AS(c.get("missing"), "test.cfg: missing: missing required key", ConfigError);
  CHECK_THROWS_AS(Config::load("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("tolerance assignments") {
  const auto [name, value] = parse_assignment("transversal.residual=2e-5");
  CHECK(name == "transversal.residual");
  CHECK(value == 2e-5);
  CHECK_THROWS_AS(parse_assignment("x=-1"), ConfigError);
  CHECK_THROWS_AS(parse_assignment("x=0"), ConfigError);
  CHECK_THROWS_AS(parse_assignment("x"), ConfigError);
  CHECK_THROWS_AS(parse_assignment("=1"), ConfigError);
}

TEST_CASE("reports: bounds, NaN and tolerance overrides") {
  ResidualReport r("demo");
  r.add("a", 1e-7, 1e-6);
  r.add("b", 0.5, 1e-2, Bound::lower);
  r.add("c", std::nan(""), 1.0);
  CHECK(r.get("a").pass);
  CHECK(r.get("b").pass);
  CHECK_FALSE(r.get("c").pass);
  CHECK_FALSE(r.passed());
  CHECK(r.set_tolerance("a", 1e-8) == 1);
  CHECK_FALSE(r.get("a").pass);
  CHECK(r.set_tolerance("nothing", 1.0) == 0);
  CHECK_THROWS_AS(r.get("nothing"), std::out_of_range);
}

TEST_CASE("report layout is fixed") {
  ResidualReport r("demo");
  r.add("x.residual", 1.25e-7, 1e-5, Bound::upper, {{-0.5, 0.25}}, "note");
  r.add("x.control", 0.5, 1e-2, Bound::lower);
  r.note("hello");
  std::ostringstream os;
  write_report(os, "transversal", {{"manifold.name", "sphere(2,1)"}}, {r});
  const std::string expected = std::string("tool tjf ") + kToolVersion +
                               "\n"
                               "command transversal\n"
                               "config manifold.name = sphere(2,1)\n"
                               "section demo\n"
                               "check x.residual value=1.250000e-07 <= 1.000000e-05 pass "
                               "excluded=-5.000000e-01:2.500000e-01 note\n"
                               "check x.control value=5.000000e-01 >= 1.000000e-02 pass\n"
                               "note hello\n"
                               "summary pass\n";
  CHECK(os.str() == expected);
  CHECK(format_number(-0.0) == "0.000000e+00");
}
