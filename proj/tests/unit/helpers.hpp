#pragma once

#include "tjf/linalg.hpp"

#include <initializer_list>

namespace tjf::test {

inline Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace tjf::test
