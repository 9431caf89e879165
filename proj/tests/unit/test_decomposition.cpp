#include "helpers.hpp"
#include "tjf/catalog.hpp"
#include "tjf/decomposition.hpp"
#include "tjf/foliation.hpp"

#include <doctest.h>

#include <numbers>

using namespace tjf;
using tjf::test::vec;

namespace {

constexpr double kT = 4.0 * std::numbers::pi;

}  // namespace

TEST_CASE("S2 x R slices split into one vanishing and one parallel field") {
  const ManifoldPtr m = parse_manifold("product(sphere(2,1),euclidean(1))");
  const auto path = integrate_geodesic(m, vec({1, 0, 0}), vec({0, 1, 0}), -kT, kT);
  const auto rep = verify_decomposition(family_from_foliation(path, slice_product(m, 1)));
  CHECK(rep.status == DecompositionStatus::checked);
  CHECK(rep.dim_vanishing == 1);
  CHECK(rep.dim_parallel == 1);
  CHECK(rep.checks.passed());
  CHECK(rep.quotient_checked);
}

TEST_CASE("conjugate point family on S3 vanishes entirely") {
  const ManifoldPtr m = sphere(3, 1.0);
  const auto path = integrate_geodesic(m, vec({1, 0, 0}), vec({0, 1, 0}), -kT, kT);
  const auto rep = verify_decomposition(family_from_foliation(path, point_foliation(m)));
  CHECK(rep.dim_vanishing == 2);
  CHECK(rep.dim_parallel == 0);
  CHECK_FALSE(rep.quotient_checked);
  CHECK(rep.checks.passed());
}

TEST_CASE("translations of flat space are parallel") {
  const auto path = integrate_geodesic(euclidean(3), vec({0, 0, 0}), vec({0, 0, 1}), -kT, kT);
  const auto rep = verify_decomposition(make_family_frame(make_bundle(path), Mat::Identity(2, 2),
                                                          Mat::Zero(2, 2)));
  CHECK(rep.dim_vanishing == 0);
  CHECK(rep.dim_parallel == 2);
  CHECK(rep.quotient_riccati < 1e-12);
  CHECK(rep.checks.passed());
}

TEST_CASE("a family with neither zeros nor parallel members reports a dimension defect") {
  // Y(t) = (1 + t/2) I on [-0.5, 0.5]: the zeros at t = -2 lie outside the
  // path and no member is parallel.
  const auto path = integrate_geodesic(euclidean(3), vec({0, 0, 0}), vec({0, 0, 1}), -0.5, 0.5);
  Mat y0 = Mat::Identity(2, 2), yp0 = 0.5 * Mat::Identity(2, 2);
  const auto rep = verify_decomposition(make_family_frame(make_bundle(path), y0, yp0));
  CHECK(rep.dim_vanishing == 0);
  CHECK(rep.dim_parallel == 0);
  CHECK(rep.dimension_defect == -2);
  CHECK_FALSE(rep.checks.get("decomposition.dimension_defect").pass);
}

TEST_CASE("negative curvature makes the decomposition inapplicable") {
  const ManifoldPtr h = hyperbolic(2, 1.0);
  const auto path = integrate_geodesic(h, vec({0, 0}), vec({0.5, 0}), -1.0, 1.0);
  const auto rep =
      verify_decomposition(make_family_frame(make_bundle(path), Mat::Identity(1, 1), Mat::Zero(1, 1)));
  CHECK(rep.status == DecompositionStatus::inapplicable);
  CHECK(rep.reason.find("hypothesis failure: negative curvature") == 0);
  CHECK(rep.hypothesis.min_sectional < -0.5);
}

TEST_CASE("non-self-adjoint families are rejected") {
  const auto path = integrate_geodesic(euclidean(3), vec({0, 0, 0}), vec({0, 0, 1}), 1.0);
  Mat yp0(2, 2);
  yp0 << 0, 1, 0, 0;
  CHECK_THROWS_AS(verify_decomposition(make_family_frame(make_bundle(path), Mat::Identity(2, 2), yp0)),
                  PreconditionError);
}
