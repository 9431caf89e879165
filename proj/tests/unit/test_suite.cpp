#include "tjf/catalog.hpp"
#include "tjf/suite.hpp"

#include <doctest.h>

#include <atomic>
#include <stdexcept>
#include <string>

using namespace tjf;

TEST_CASE("parallel_for visits every index and rethrows the lowest failure") {
  std::atomic<int> sum{0};
  parallel_for(100, 3, [&](std::size_t i) { sum += static_cast<int>(i); });
  CHECK(sum == 4950);
  std::string message;
  try {
    parallel_for(50, 4, [](std::size_t i) {
      if (i == 7 || i == 30) throw std::runtime_error("index " + std::to_string(i));
    });
  } catch (const std::runtime_error& e) {
    message = e.what();
  }
  CHECK(message == "index 7");
}

TEST_CASE("battery manifolds parse") {
  CHECK(battery_manifolds().size() == 6);
  for (const auto& spec : battery_manifolds()) CHECK_NOTHROW(parse_manifold(spec));
}

TEST_CASE("battery draws are deterministic in the generator state") {
  const ManifoldPtr m = parse_manifold("sphere(3,1)");
  std::mt19937_64 a(11), b(11);
  const BatteryDraw da = draw_battery_case(m, a, 1e-3, 1.0);
  const BatteryDraw db = draw_battery_case(m, b, 1e-3, 1.0);
  CHECK(da.family->self_adjoint());
  CHECK((da.family->initial_values() - db.family->initial_values()).norm() == 0.0);
  CHECK((da.vertical - db.vertical).norm() == 0.0);
  CHECK((da.combination - db.combination).norm() == 0.0);
  // The combination is orthogonal to the subspace.
  CHECK((da.vertical.transpose() * da.combination).norm() < 1e-12);
}

TEST_CASE("suite tolerance lookup") {
  SuiteOptions o;
  o.tolerances["hopf"] = 3e-5;
  CHECK(o.tol("hopf", 1e-5) == 3e-5);
  CHECK(o.tol("other", 1e-5) == 1e-5);
}
