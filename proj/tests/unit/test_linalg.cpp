#include "helpers.hpp"
#include "tjf/linalg.hpp"

#include <doctest.h>

#include <cmath>

using namespace tjf;
using tjf::test::vec;

TEST_CASE("orthonormal basis drops dependent columns") {
  Mat a(3, 3);
  a << 1, 2, 0,
       0, 0, 1,
       1, 2, 0;
  const Mat q = orthonormal_basis(a);
  CHECK(q.cols() == 2);
  CHECK((q.transpose() * q - Mat::Identity(2, 2)).norm() < 1e-14);
  const Mat c = orthonormal_complement(q, 3);
  CHECK(c.cols() == 1);
  CHECK((q.transpose() * c).norm() < 1e-14);
  // The complement of span{(1,0,1), (0,1,0)} is (1,0,-1)/√2.
  CHECK(std::abs(std::abs(c(0, 0)) - std::sqrt(0.5)) < 1e-14);
  CHECK(std::abs(c(0, 0) + c(2, 0)) < 1e-14);
}

TEST_CASE("Procrustes alignment recovers a rotated basis") {
  const double th = 0.3;
  Mat rot(2, 2);
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const Mat ref = Mat::Identity(4, 4).leftCols(2);
  const Mat basis = ref * rot;
  CHECK((align_basis(basis, ref) - ref).norm() < 1e-14);
  const Mat p = polar_factor(2.0 * rot);
  CHECK((p - rot).norm() < 1e-14);
}

TEST_CASE("near null space of a tall stack") {
  MatrixXd m(6, 3);
  m.setZero();
  m.col(0).setOnes();
  m(0, 1) = 1.0;
  const MatrixXd n = near_null_space(m, 1e-10);
  CHECK(n.cols() == 1);
  CHECK((m * n).norm() < 1e-12);
  const auto r = singular_range(Mat::Identity(3, 3) * 2.0);
  CHECK(r.min == doctest::Approx(2.0));
  CHECK(r.max == doctest::Approx(2.0));
}

TEST_CASE("finite difference stencils are exact on low degree polynomials") {
  auto poly = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x * x - 0.1 * std::pow(x, 4); };
  auto d1 = [](double x) { return -2.0 + 1.5 * x * x - 0.4 * x * x * x; };
  auto d2 = [](double x) { return 3.0 * x - 1.2 * x * x; };
  const double x0 = 0.7, h = 0.1;
  CHECK(stencil_first(poly(x0 - 2 * h), poly(x0 - h), poly(x0 + h), poly(x0 + 2 * h), h) ==
        doctest::Approx(d1(x0)).epsilon(1e-12));
  CHECK(stencil_second(poly(x0 - 2 * h), poly(x0 - h), poly(x0), poly(x0 + h), poly(x0 + 2 * h), h) ==
        doctest::Approx(d2(x0)).epsilon(1e-11));
  auto f = [&](int o) { return poly(x0 + o * h); };
  CHECK(stencil7_first(f, h) == doctest::Approx(d1(x0)).epsilon(1e-12));
  CHECK(stencil7_second(f, h) == doctest::Approx(d2(x0)).epsilon(1e-10));
  CHECK(stencil_first_forward(f(0), f(1), f(2), f(3), f(4), h) == doctest::Approx(d1(x0)).epsilon(1e-11));
}

TEST_CASE("seven point stencils are sixth order") {
  auto err = [](double h) {
    auto f = [h](int o) { return std::sin(1.0 + o * h); };
    return std::abs(stencil7_second(f, h) + std::sin(1.0));
  };
  // Halving the spacing divides the truncation error by about 2^6.
  CHECK(err(0.2) / err(0.1) > 50.0);
}

TEST_CASE("tensor contractions") {
  Tensor3 g(2);
  g(0, 0, 1) = 2.0;
  g(1, 1, 1) = -1.0;
  const Vec w = contract(g, vec({1, 0}), vec({0, 3}));
  CHECK(w[0] == doctest::Approx(6.0));
  CHECK(w[1] == doctest::Approx(0.0));
  CHECK(g.max_abs() == doctest::Approx(2.0));
  Tensor4 r(2);
  r(0, 0, 1, 1) = 1.0;  // R(e0, e1) e1 = e0
  r(0, 1, 0, 1) = -1.0;
  const Vec z = contract(r, vec({1, 0}), vec({0, 1}), vec({0, 1}));
  CHECK(z[0] == doctest::Approx(1.0));
}
