#include "helpers.hpp"
#include "tjf/catalog.hpp"
#include "tjf/manifold.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tjf;
using tjf::test::vec;

namespace {

Vec gaussian(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// Largest violation of the algebraic curvature identities at x.
double symmetry_defect(const Manifold& m, const Vec& x, std::mt19937_64& rng) {
  const int n = m.dim();
  const Mat g = m.metric(x);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Vec u = gaussian(rng, n), v = gaussian(rng, n), w = gaussian(rng, n), z = gaussian(rng, n);
    const Vec bianchi = riemann(m, x, u, v, w) + riemann(m, x, v, w, u) + riemann(m, x, w, u, v);
    worst = std::max(worst, bianchi.norm());
    const double a = inner(g, riemann(m, x, u, v, w), z);
    worst = std::max(worst, std::abs(a + inner(g, riemann(m, x, v, u, w), z)));
    worst = std::max(worst, std::abs(a + inner(g, riemann(m, x, u, v, z), w)));
    worst = std::max(worst, std::abs(a - inner(g, riemann(m, x, w, z, u), v)));
  }
  return worst;
}

}  // namespace

TEST_CASE("round sphere has constant curvature 1/r^2") {
  std::mt19937_64 rng(1);
  for (double r : {1.0, 2.0}) {
    const ManifoldPtr m = sphere(3, r);
    for (int i = 0; i < 5; ++i) {
      const Vec x = m->sample_point(rng);
      const Vec u = gaussian(rng, 3), v = gaussian(rng, 3);
      CHECK(sectional(*m, x, u, v) == doctest::Approx(1.0 / (r * r)).epsilon(1e-10));
    }
  }
}

TEST_CASE("stereographic maps are inverse to each other") {
  const Vec x = vec({0.3, -1.2});
  const Vec y = stereographic_to_sphere(x, 2.0);
  CHECK(y.norm() == doctest::Approx(2.0));
  CHECK((sphere_to_stereographic(y, 2.0) - x).norm() < 1e-14);
}

TEST_CASE("flat and hyperbolic models") {
  std::mt19937_64 rng(2);
  const ManifoldPtr e = euclidean(3);
  CHECK(sectional(*e, vec({1, 2, 3}), vec({1, 0, 0}), vec({0, 1, 1})) == doctest::Approx(0.0));
  const ManifoldPtr h = hyperbolic(2, 1.0);
  CHECK_FALSE(h->nonnegatively_curved());
  CHECK(sectional(*h, vec({0.2, -0.3}), vec({1, 0}), vec({0, 1})) ==
        doctest::Approx(-1.0).epsilon(1e-9));
  const ManifoldPtr c = cylinder(1.5);
  CHECK(sectional(*c, vec({0.4, 2.0}), vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
}

TEST_CASE("Berger sphere sectional curvatures") {
  for (double eps : {0.6, 0.8, 1.0}) {
    const ManifoldPtr m = berger_sphere(eps);
    const Vec q = vec({1, 0, 0, 0});
    // Fiber direction e1 has length ε; planes containing it have curvature ε²,
    // the horizontal plane has 4 - 3ε².
    CHECK(sectional(*m, q, vec({1, 0, 0}), vec({0, 1, 0})) == doctest::Approx(eps * eps).epsilon(1e-12));
    CHECK(sectional(*m, q, vec({0, 1, 0}), vec({0, 0, 1})) ==
          doctest::Approx(4.0 - 3.0 * eps * eps).epsilon(1e-12));
  }
}

TEST_CASE("products are block diagonal with flat mixed planes") {
  const ManifoldPtr m = parse_manifold("product(sphere(2,1),euclidean(2))");
  CHECK(m->dim() == 4);
  CHECK(m->factor_count() == 2);
  const Vec x = vec({0.2, 0.1, 5, -3});
  CHECK(sectional(*m, x, vec({1, 0, 0, 0}), vec({0, 1, 0, 0})) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sectional(*m, x, vec({1, 0, 0, 0}), vec({0, 0, 1, 0})) == doctest::Approx(0.0));
  CHECK(sectional(*m, x, vec({0, 0, 1, 0}), vec({0, 0, 0, 1})) == doctest::Approx(0.0));
}

TEST_CASE("curvature symmetries hold on every catalog backend") {
  std::mt19937_64 rng(3);
  for (const char* spec : {"euclidean(3)", "sphere(2,1)", "sphere(3,2)", "berger_sphere(0.7)",
                           "product(sphere(2,1),euclidean(1))", "hyperbolic(3,1)"}) {
    CAPTURE(spec);
    const ManifoldPtr m = parse_manifold(spec);
    const Vec x = m->sample_point(rng);
    CHECK(symmetry_defect(*m, x, rng) < 1e-7);
  }
}

TEST_CASE("finite difference metric derivatives agree with the analytic ones") {
  const ManifoldPtr m = sphere(2, 1.0);
  const auto* chart = dynamic_cast<const ChartManifold*>(m.get());
  REQUIRE(chart != nullptr);
  const Vec x = vec({0.4, -0.7});
  const Tensor3 a = chart->metric_d1(x), f = chart->metric_d1_fd(x);
  double worst = 0.0;
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) worst = std::max(worst, std::abs(a(k, i, j) - f(k, i, j)));
  CHECK(worst < 1e-8);
}

TEST_CASE("metric-only chart: dx^2 + cos^2(x) dy^2 has curvature 1") {
  ChartSpec spec;
  spec.dim = 2;
  spec.label = "warped";
  spec.metric = [](const Vec& p) {
    Mat g = Mat::Identity(2, 2);
    g(1, 1) = std::cos(p[0]) * std::cos(p[0]);
    return g;
  };
  spec.domain = [](const Vec& p) { return std::abs(p[0]) < 1.2; };
  spec.sampler = [](std::mt19937_64&) { return vec({0.1, 0.0}); };
  const ChartManifold m(spec);
  CHECK_FALSE(m.has_analytic_d1());
  CHECK(sectional(m, vec({0.3, 1.0}), vec({1, 0}), vec({0, 1})) == doctest::Approx(1.0).epsilon(1e-5));
  std::mt19937_64 rng(4);
  CHECK(symmetry_defect(m, vec({0.3, 1.0}), rng) < 1e-4);
}

TEST_CASE("catalog parsing errors") {
  CHECK_THROWS_AS(parse_manifold("torus(2)"), Error);
  CHECK_THROWS_AS(parse_manifold("sphere(2"), Error);
  CHECK_THROWS_AS(parse_manifold("sphere(2,-1)"), Error);
  CHECK(parse_manifold(" product( sphere(2,1) , euclidean(1) ) ")->dim() == 3);
}

TEST_CASE("out of domain evaluation throws") {
  const ManifoldPtr h = hyperbolic(2, 1.0);
  CHECK_THROWS_AS(metric_at(*h, vec({0.99, 0.0})), DomainError);
  CHECK_THROWS_AS(sectional(*euclidean(2), vec({0, 0}), vec({1, 0}), vec({2, 0})), PreconditionError);
}
