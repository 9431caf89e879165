#include "helpers.hpp"
#include "tjf/catalog.hpp"
#include "tjf/foliation.hpp"
#include "tjf/jacobi.hpp"

#include <doctest.h>

#include <cmath>

using namespace tjf;
using tjf::test::vec;

TEST_CASE("rotation orbits on the sphere: rank drops at the poles") {
  const ManifoldPtr m = sphere(2, 1.0);
  const FoliationSpec fol = so2_on_sphere(m);
  CHECK(leaf_tangent(fol, vec({0, 0})).rank == 0);
  CHECK(leaf_tangent(fol, vec({1, 0})).rank == 1);
  CHECK(generic_rank(fol, 7, 200) == 1);
  const Vec x = vec({0.3, 0.4});
  const Vec h = horizontal_project(fol, x, vec({1, 1}));
  CHECK(std::abs(inner(m->metric(x), h, fol.generators[0](x))) < 1e-12);
  const Mat hb = horizontal_basis(fol, x);
  CHECK(hb.cols() == 1);
  CHECK(std::abs(inner(m->metric(x), hb.col(0), hb.col(0)) - 1.0) < 1e-12);
}

TEST_CASE("generators of the catalog actions are Killing fields") {
  const ManifoldPtr s = sphere(2, 1.0);
  const auto p1 = integrate_geodesic(s, vec({1, 0}), vec({0.6, 0.8}), 1.0);
  CHECK(killing_defect(*p1, so2_on_sphere(s).generators[0]) < 1e-6);
  const ManifoldPtr b = berger_sphere(0.7);
  const auto p2 = integrate_geodesic(b, vec({1, 0, 0, 0}), vec({0, 0.6, 0.8}), 1.0);
  CHECK(killing_defect(*p2, hopf_on_s3(b).generators[0]) < 1e-6);
}

TEST_CASE("horizontal geodesics stay horizontal") {
  const ManifoldPtr m = sphere(2, 1.0);
  const FoliationSpec fol = so2_on_sphere(m);
  // Meridian through (1, 0): the radial direction is normal to the orbit.
  const Vec x = vec({1, 0});
  const auto hg = horizontal_geodesic(fol, x, vec({1, 0}), 1.0);
  CHECK(hg.defect < 1e-8);
  CHECK_THROWS_AS(horizontal_geodesic(fol, x, vec({0, 1}), 1.0), PreconditionError);
  CHECK(transnormality_defect(hopf_on_s3(berger_sphere(0.8)), 3, 5, 0.5) < 1e-6);
}

TEST_CASE("accessibility ranks") {
  const ManifoldPtr b = berger_sphere(1.0);
  const auto hopf = accessibility_rank(hopf_on_s3(b), vec({0.5, 0.5, 0.5, 0.5}), 2);
  CHECK(hopf.rank == 3);
  CHECK(hopf.conclusive);
  // Horizontal directions of the slices {a} × R are the sphere directions,
  // closed under brackets.
  const ManifoldPtr p = parse_manifold("product(sphere(2,1),euclidean(1))");
  const auto slices = accessibility_rank(slice_product(p, 1), vec({0.3, 0.2, 1.0}), 2);
  CHECK(slices.rank == 2);
  CHECK(slices.conclusive);
}

TEST_CASE("dual leaf of the slices stays in its slice") {
  const ManifoldPtr m = parse_manifold("product(sphere(2,1),euclidean(1))");
  DualLeafOptions opts;
  opts.budget = 24;
  opts.depth = 2;
  const Vec p = vec({0.3, -0.2, 0.7});
  const auto cloud = dual_leaf_trace(slice_product(m, 1), p, opts);
  CHECK(cloud.budget_used <= opts.budget);
  CHECK(cloud.generic_rank == 1);
  double drift = 0.0;
  for (const auto& x : cloud.points) drift = std::max(drift, std::abs(x[2] - p[2]));
  CHECK(drift < 1e-6);
}

TEST_CASE("covering radius of a cloud that contains the net is zero") {
  const ManifoldPtr m = sphere(2, 1.0);
  const auto net = reference_net(*m, 50, 3);
  CHECK(net.size() == 50);
  CHECK(covering_radius(*m, net, net) == doctest::Approx(0.0));
  const std::vector<Vec> single{vec({0, 0})};
  // The farthest net point from the south pole is close to the north pole.
  CHECK(covering_radius(*m, single, net) > 2.0);
}

TEST_CASE("flats of S2 x R2 through a sphere and a line direction") {
  const ManifoldPtr m = parse_manifold("product(sphere(2,1),euclidean(2))");
  const FoliationSpec fol = slice_product(m, 1);
  const Vec p = vec({0.2, 0.1, 0.0, 1.0});
  const Mat g = m->metric(p);
  Vec x = vec({1, 0.5, 0, 0});
  x /= norm(g, x);
  const Vec v = vec({0, 0, 0.6, 0.8});
  FlatCheckOptions opts;
  opts.grid = 3;
  opts.angles = 2;
  const ResidualReport r = flat_check(fol, p, x, v, opts);
  CHECK(r.passed());
  CHECK(r.get("flat.sectional").value < 1e-8);
  CHECK(r.get("flat.total_geodesy").value < 1e-5);

  // Two sphere directions: not flat, and v fails the dual-leaf certificate.
  const Vec y = vec({0, 0.5, 0, 0}) / norm(m->metric(vec({0, 0, 0, 0})), vec({0, 0.5, 0, 0}));
  const Vec x0 = vec({0.5, 0, 0, 0});
  CHECK_THROWS_AS(flat_check(fol, vec({0, 0, 0, 0}), x0, y, opts), PreconditionError);
  opts.enforce_certificate = false;
  const ResidualReport neg = flat_check(fol, vec({0, 0, 0, 0}), x0, y, opts);
  CHECK_FALSE(neg.passed());
  CHECK(neg.get("flat.sectional").value == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("foliation catalog lookup") {
  const ManifoldPtr p = parse_manifold("product(sphere(2,1),euclidean(1))");
  CHECK(builtin_foliation("slice_product", p, 1).generators.size() == 1);
  CHECK_THROWS_AS(builtin_foliation("nonsense", p), PreconditionError);
  CHECK_THROWS_AS(so2_on_sphere(euclidean(2)), PreconditionError);
  CHECK_THROWS_AS(hopf_on_s3(sphere(3, 1.0)), PreconditionError);
}
