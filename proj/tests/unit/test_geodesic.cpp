#include "helpers.hpp"
#include "tjf/catalog.hpp"
#include "tjf/geodesic.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace tjf;
using tjf::test::vec;

namespace {

GeodesicOptions with_step(double h) {
  GeodesicOptions o;
  o.step = h;
  return o;
}

}  // namespace

TEST_CASE("straight lines in Euclidean space") {
  const auto path = integrate_geodesic(euclidean(3), vec({1, 2, 3}), vec({0, 0.6, 0.8}), -1.0, 2.0);
  CHECK(path->t_begin() == doctest::Approx(-1.0));
  CHECK(path->t_end() == doctest::Approx(2.0));
  CHECK(path->time(path->base_index()) == 0.0);
  const std::size_t k = path->nearest_index(1.5);
  CHECK((path->point(k) - vec({1, 2.9, 4.2})).norm() < 1e-12);
  const auto [x, v] = path->evaluate(0.2345);
  CHECK((x - vec({1, 2 + 0.6 * 0.2345, 3 + 0.8 * 0.2345})).norm() < 1e-12);
}

TEST_CASE("Berger sphere at eps = 1 follows one-parameter subgroups") {
  const ManifoldPtr m = berger_sphere(1.0);
  const Vec q = vec({0.5, 0.5, 0.5, 0.5});
  const Vec v = vec({0, 0.6, 0.8});
  const auto path = integrate_geodesic(m, q, v, 3.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < path->size(); k += 100)
    worst = std::max(worst, (path->point(k) - quaternion_move(q, v, path->time(k))).norm());
  CHECK(worst < 1e-10);
}

TEST_CASE("great circles: distance grows at unit speed and closes after 2 pi") {
  const ManifoldPtr m = sphere(2, 1.0);
  const Vec x0 = vec({1, 0});
  const Vec v0 = vec({0, 1});  // unit at the equator of the chart
  const auto path = integrate_geodesic(m, x0, v0, 2.0 * std::numbers::pi);
  for (double t : {0.5, 1.0, 2.5}) {
    const std::size_t k = path->nearest_index(t);
    CHECK(m->distance(x0, path->point(k)) == doctest::Approx(path->time(k)).epsilon(1e-9));
  }
  CHECK((path->evaluate(2.0 * std::numbers::pi).first - x0).norm() < 1e-9);
  CHECK(speed_deviation(*path) < 1e-10);
  CHECK(geodesic_residual(*path) < 1e-6);
}

TEST_CASE("RK4 has fourth order convergence") {
  const ManifoldPtr m = sphere(2, 1.0);
  auto end_error = [&](double h) {
    const auto p = integrate_geodesic(m, vec({1, 0}), vec({0, 1}), 2.0 * std::numbers::pi, with_step(h));
    // Grid of whole steps: compare at the last node with the closed form.
    const double t = p->time(p->size() - 1);
    const Vec exact = vec({std::cos(t), std::sin(t)});
    return (p->point(p->size() - 1) - exact).norm();
  };
  CHECK(end_error(0.04) / end_error(0.02) > 8.0);
}

TEST_CASE("parallel transport preserves inner products") {
  const ManifoldPtr m = berger_sphere(0.7);
  const auto path = integrate_geodesic(m, vec({1, 0, 0, 0}), vec({0.3, 0.4, 0.5}) / std::sqrt(0.49 * 0.09 + 0.41), 2.0);
  Mat w0(3, 2);
  w0 << 1, 0, 0, 1, 0.5, -1;
  const FramePtr f = parallel_transport(path, w0);
  CHECK(f->columns() == 2);
  CHECK(transport_gram_drift(*f) < 1e-10);
  CHECK(transport_residual(*f) < 1e-6);
}

TEST_CASE("velocity is parallel along the geodesic") {
  const ManifoldPtr m = sphere(3, 1.0);
  const auto path = integrate_geodesic(m, vec({0.2, 0.1, 0}), vec({0, 0, 1}) * 0.5 * (1 + 0.05), 1.0);
  const FramePtr f = parallel_transport(path, path->velocity(0));
  double worst = 0.0;
  for (std::size_t k = 0; k < path->size(); ++k)
    worst = std::max(worst, (f->at(k).col(0) - path->velocity(k)).norm());
  CHECK(worst < 1e-10);
}

TEST_CASE("non-unit initial velocity and domain exit") {
  CHECK_THROWS_AS(integrate_geodesic(euclidean(2), vec({0, 0}), vec({1, 1}), 1.0), PreconditionError);
  const ManifoldPtr h = hyperbolic(2, 1.0);
  // Unit speed at the origin of the Poincaré ball means |v| = 1/2.
  CHECK_THROWS_AS(integrate_geodesic(h, vec({0, 0}), vec({0.5, 0}), 10.0), DomainError);
  GeodesicOptions o;
  o.truncate_at_exit = true;
  const auto p = integrate_geodesic(h, vec({0, 0}), vec({0.5, 0}), 10.0, o);
  CHECK(p->truncated());
  CHECK(p->t_end() < 10.0);
}

TEST_CASE("geodesic CSV has a header and one row per sample") {
  const auto p = integrate_geodesic(euclidean(2), vec({0, 0}), vec({1, 0}), 0.01);
  std::ostringstream os;
  p->write_csv(os);
  const std::string s = os.str();
  CHECK(s.rfind("t,", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == static_cast<long>(p->size() + 1));
}
