#include "helpers.hpp"
#include "tjf/catalog.hpp"
#include "tjf/foliation.hpp"
#include "tjf/jacobi.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace tjf;
using tjf::test::vec;

namespace {

PathPtr equator(double r, double begin, double end) {
  // In the stereographic chart of radius r the point (r, 0) lies on the
  // equator, where the conformal factor is 1.
  return integrate_geodesic(sphere(2, r), vec({r, 0}), vec({0, 1}), begin, end);
}

}  // namespace

TEST_CASE("normal bundle frame is orthonormal and normal to the velocity") {
  const auto bundle = make_bundle(integrate_geodesic(berger_sphere(0.8), vec({1, 0, 0, 0}),
                                                     vec({0, 0.6, 0.8}), -1.0, 1.0));
  CHECK(bundle->rank() == 2);
  CHECK(bundle->frame_defect() < 1e-10);
}

TEST_CASE("Jacobi field on the round sphere is r sin(t/r)") {
  for (double r : {1.0, 2.0}) {
    const auto path = equator(r, -1.0, 7.0);
    const JacobiField j = integrate_jacobi(path, vec({0, 0}), vec({1, 0}));
    double worst = 0.0;
    for (std::size_t k = 0; k < j.size(); ++k) {
      const double t = path->time(k);
      worst = std::max(worst, std::abs(std::abs(j.value(k)[0]) - std::abs(r * std::sin(t / r))));
      worst = std::max(worst, std::abs(std::abs(j.derivative(k)[0]) - std::abs(std::cos(t / r))));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("Jacobi field in Euclidean space is affine") {
  const auto path = integrate_geodesic(euclidean(3), vec({0, 0, 0}), vec({1, 0, 0}), 2.0);
  const JacobiField j = integrate_jacobi(path, vec({0, 1, 0}), vec({0, 0.5, 2}));
  const std::size_t k = path->size() - 1;
  CHECK((j.tangent_value(k) - vec({0, 2, 4})).norm() < 1e-12);
  CHECK((j.tangent_derivative(k) - vec({0, 0.5, 2})).norm() < 1e-12);
}

TEST_CASE("Riccati operator of the conjugate point family is cot t") {
  const auto path = equator(1.0, 0.0, 3.0);
  const auto family = make_family(path, {{vec({0, 0}), vec({1, 0})}});
  CHECK(family->self_adjoint());
  for (double t : {0.3, 1.0, 2.5}) {
    const RiccatiOperator l = riccati_at(*family, t);
    REQUIRE_FALSE(l.singular);
    CHECK(l.matrix(0, 0) == doctest::Approx(1.0 / std::tan(t)).epsilon(1e-8));
  }
  CHECK(riccati_at_sample(*family, 0).singular);
}

TEST_CASE("zeros are located at the conjugate points") {
  const auto path = equator(1.0, -4.0, 4.0);
  const auto family = make_family(path, {{vec({0, 0}), vec({1, 0})}});
  const auto zeros = find_zeros(*family, Mat::Identity(1, 1));
  REQUIRE(zeros.size() == 3);
  CHECK(zeros[0].t == doctest::Approx(-std::numbers::pi).epsilon(1e-9));
  CHECK(std::abs(zeros[1].t) < 1e-9);
  CHECK(zeros[2].t == doctest::Approx(std::numbers::pi).epsilon(1e-9));
}

TEST_CASE("Omega is conserved for self-adjoint and non-self-adjoint data alike") {
  const auto path = integrate_geodesic(berger_sphere(0.6), vec({1, 0, 0, 0}), vec({0, 1, 0}), -3.0, 3.0);
  const auto bundle = make_bundle(path);
  Mat y0(2, 2), yp0(2, 2);
  y0 << 1, 0, 0, 1;
  yp0 << 0.2, 0.7, -0.1, 0.4;  // not symmetric
  const auto family = make_family_frame(bundle, y0, yp0);
  CHECK_FALSE(family->self_adjoint());
  CHECK(family->omega_drift() < 1e-8 * family->omega_scale());
  CHECK(family->ode_residual() < 1e-6);
}

TEST_CASE("Killing families are self-adjoint") {
  const ManifoldPtr m = berger_sphere(0.8);
  const auto path = integrate_geodesic(m, vec({1, 0, 0, 0}), vec({0, 1, 0}), -2.0, 2.0);
  const auto family = family_from_killing(path, hopf_on_s3(m).generators);
  CHECK(family->members() == 2);
  CHECK(family->self_adjoint());
  CHECK(family->omega_drift() < 1e-8 * family->omega_scale());
}

TEST_CASE("foliation families: slices of a product") {
  const ManifoldPtr m = parse_manifold("product(sphere(2,1),euclidean(1))");
  const auto path = integrate_geodesic(m, vec({1, 0, 0}), vec({0, 1, 0}), -1.0, 1.0);
  const auto family = family_from_foliation(path, slice_product(m, 1));
  CHECK(family->self_adjoint());
  CHECK(family->members() == 2);
}

TEST_CASE("invalid family data is rejected") {
  const auto path = equator(1.0, 0.0, 1.0);
  // Tangent to the geodesic.
  CHECK_THROWS_AS(make_family(path, {{vec({0, 1}), vec({0, 0})}}), PreconditionError);
  // Wrong number of members.
  CHECK_THROWS_AS(make_family(path, {{vec({1, 0}), vec({0, 0})}, {vec({1, 0}), vec({0, 0})}}),
                  PreconditionError);
}
