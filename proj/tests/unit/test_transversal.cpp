#include "helpers.hpp"
#include "tjf/catalog.hpp"
#include "tjf/foliation.hpp"
#include "tjf/transversal.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace tjf;
using tjf::test::vec;

namespace {

Mat first_member(int m) {
  Mat c = Mat::Zero(m, 1);
  c(0, 0) = 1.0;
  return c;
}

VectorXd unit(int m, int i) {
  VectorXd c = VectorXd::Zero(m);
  c[i] = 1.0;
  return c;
}

}  // namespace

TEST_CASE("Hopf subspace on the round 3-sphere: quotient curvature 4") {
  const ManifoldPtr m = berger_sphere(1.0);
  const auto path = integrate_geodesic(m, vec({0.5, 0.5, -0.5, 0.5}), vec({0, 0.6, 0.8}), -2.0, 2.0);
  const auto family = family_from_killing(path, hopf_on_s3(m).generators);
  const auto split = build_split(make_subfamily(family, first_member(family->members())));
  CHECK(split->vertical_dim() == 1);
  CHECK(split->transversal_dim() == 1);
  CHECK(split->dimension_defect() == 0);
  CHECK(split->basis_defect() < 1e-10);

  const TransversalResidual r = transversal_residual(*split, unit(family->members(), 1));
  CHECK(r.residual < 1e-5);
  CHECK(r.curvature_min == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(r.curvature_max == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(r.tangential_min == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.oneill_min == doctest::Approx(3.0).epsilon(1e-6));
  // Without the O'Neill term the equation is visibly violated.
  CHECK(r.control > 1e-2);
  CHECK(r.sup_a == doctest::Approx(1.0).epsilon(1e-6));

  const FirstOrderResidual e = first_order_residual(*split);
  CHECK(e.derivative_identity < 1e-6);
  CHECK(e.frame_identity < 1e-6);
  CHECK(e.frame_normal < 1e-6);
  CHECK(oneill_spectrum(*split).min >= -1e-10);
}

TEST_CASE("flat space has no O'Neill term") {
  const auto path = integrate_geodesic(euclidean(3), vec({0, 0, 0}), vec({1, 0, 0}), -2.0, 2.0);
  const auto bundle = make_bundle(path);
  Mat y0 = Mat::Identity(2, 2), yp0 = Mat::Zero(2, 2);
  const auto family = make_family_frame(bundle, y0, yp0);
  const auto split = build_split(make_subfamily(family, first_member(2)));
  const TransversalResidual r = transversal_residual(*split, unit(2, 1));
  CHECK(r.sup_a < 1e-12);
  CHECK(r.residual < 1e-9);
  CHECK(r.control < 1e-9);
}

TEST_CASE("vanishing subspace produces singular windows") {
  const ManifoldPtr m = sphere(3, 1.0);
  const auto path = integrate_geodesic(m, vec({1, 0, 0}), vec({0, 1, 0}), -1.0, 4.0);
  const auto family = family_from_foliation(path, point_foliation(m));
  // The family vanishes at 0 and π; every member of the subspace does too.
  const auto split = build_split(make_subfamily(family, first_member(2)));
  REQUIRE(split->windows().size() == 2);
  CHECK(std::abs(0.5 * (split->windows()[0].begin + split->windows()[0].end)) < 1e-6);
  const auto rep = transversal_report(*split, unit(2, 1));
  CHECK(rep.get("transversal.residual").pass);
  CHECK(rep.get("transversal.residual").excluded.size() == 2);
  CHECK(first_order_report(*split).passed());
}

TEST_CASE("non-self-adjoint family: the error names the Omega entry") {
  const auto path = integrate_geodesic(sphere(3, 1.0), vec({1, 0, 0}), vec({0, 1, 0}), 0.0, 1.0);
  Mat y0 = Mat::Identity(2, 2), yp0(2, 2);
  yp0 << 0, 1, 0, 0;
  const auto family = make_family_frame(make_bundle(path), y0, yp0);
  std::string message;
  try {
    build_split(make_subfamily(family, first_member(2)));
  } catch (const PreconditionError& e) {
    message = e.what();
  }
  CHECK(message.find("Omega(") != std::string::npos);
}

TEST_CASE("subspace validation") {
  const auto path = integrate_geodesic(euclidean(3), vec({0, 0, 0}), vec({1, 0, 0}), 1.0);
  const auto family = make_family_frame(make_bundle(path), Mat::Identity(2, 2), Mat::Zero(2, 2));
  Mat dependent(2, 2);
  dependent << 1, 2, 1, 2;
  CHECK_THROWS_AS(make_subfamily(family, dependent), PreconditionError);
  CHECK_THROWS_AS(make_subfamily(family, Mat::Zero(3, 1)), PreconditionError);
  CHECK_THROWS_AS(build_split(make_subfamily(family, Mat::Identity(2, 2))), PreconditionError);
}
