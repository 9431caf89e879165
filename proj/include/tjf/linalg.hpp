#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tjf {

// Upper bound on tangent and point dimensions. Small dense objects stay on the
// stack, which matters for the per-sample linear algebra along long paths.
inline constexpr int kMaxDim = 10;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an operation's documented precondition does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Thrown when a point leaves the validity region of a chart.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double parameter = 0.0)
      : Error(what), parameter_(parameter) {}
  double parameter() const { return parameter_; }

 private:
  double parameter_;
};

/// Thrown when a numerical construction is ill-conditioned beyond its tolerances.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Rank-3 array with index order (a, b, c); used for Christoffel symbols
// Γ^k_ij stored as (k, i, j) and for metric first partials ∂_k g_ij as (k, i, j).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

  int dim() const { return n_; }
  double& operator()(int a, int b, int c) { return data_[index(a, b, c)]; }
  double operator()(int a, int b, int c) const { return data_[index(a, b, c)]; }

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator*=(double s);
  double max_abs() const;

 private:
  std::size_t index(int a, int b, int c) const {
    return static_cast<std::size_t>((a * n_ + b) * n_ + c);
  }
  int n_ = 0;
  std::vector<double> data_;
};

// Rank-4 array with index order (a, b, c, d). Curvature is stored as
// R^l_ijk at (l, i, j, k) with R(e_i, e_j) e_k = R^l_ijk e_l.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n * n), 0.0) {}

  int dim() const { return n_; }
  double& operator()(int a, int b, int c, int d) { return data_[index(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const { return data_[index(a, b, c, d)]; }

 private:
  std::size_t index(int a, int b, int c, int d) const {
    return static_cast<std::size_t>(((a * n_ + b) * n_ + c) * n_ + d);
  }
  int n_ = 0;
  std::vector<double> data_;
};

/// Γ(u, w)^k = Γ^k_ij u^i w^j, i.e. the connection term of ∇_u W.
Vec contract(const Tensor3& gamma, const Vec& u, const Vec& w);

/// R(u, v) w.
Vec contract(const Tensor4& r, const Vec& u, const Vec& v, const Vec& w);

// Orthonormal basis (Euclidean) of the column span of `cols`. Singular values
// below rel_tol * largest (or below abs_tol) are dropped.
Mat orthonormal_basis(const Mat& cols, double rel_tol = 1e-10, double abs_tol = 1e-300);

// Orthonormal basis of the orthogonal complement of an orthonormal `basis` in R^dim.
Mat orthonormal_complement(const Mat& basis, int dim);

// Orthogonal factor U V^T of the polar decomposition.
Mat polar_factor(const Mat& m);

// Re-express the orthonormal basis `basis` so that it is closest to `reference`
// (orthogonal Procrustes). Both span spaces of equal dimension.
Mat align_basis(const Mat& basis, const Mat& reference);

// Right singular vectors of `m` whose singular values fall below rel_tol times
// the largest one (or abs_tol). Dynamic size: inputs may be tall stacks.
MatrixXd near_null_space(const MatrixXd& m, double rel_tol, double abs_tol = 0.0);

// Smallest and largest singular value.
struct SingularRange {
  double min = 0.0;
  double max = 0.0;
};
SingularRange singular_range(const Mat& m);

// Five-point central stencils on equally spaced values f(-2), f(-1), f(0), f(1), f(2).
template <typename T>
T stencil_first(const T& m2, const T& m1, const T& p1, const T& p2, double spacing) {
  return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * spacing);
}

template <typename T>
T stencil_second(const T& m2, const T& m1, const T& c, const T& p1, const T& p2, double spacing) {
  return (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * spacing * spacing);
}

// Seven-point central stencils; f(o) for o = -3..3 is supplied by a callable.
template <typename F>
auto stencil7_first(F&& f, double spacing) {
  return (-f(-3) + 9.0 * f(-2) - 45.0 * f(-1) + 45.0 * f(1) - 9.0 * f(2) + f(3)) / (60.0 * spacing);
}

template <typename F>
auto stencil7_second(F&& f, double spacing) {
  return (2.0 * f(-3) - 27.0 * f(-2) + 270.0 * f(-1) - 490.0 * f(0) + 270.0 * f(1) - 27.0 * f(2) +
          2.0 * f(3)) /
         (180.0 * spacing * spacing);
}

// One-sided five-point first derivative at f(0) from f(0..4) at increasing offsets
// (pass a negative spacing for backward differences).
template <typename T>
T stencil_first_forward(const T& f0, const T& f1, const T& f2, const T& f3, const T& f4,
                        double spacing) {
  return (-25.0 * f0 + 48.0 * f1 - 36.0 * f2 + 16.0 * f3 - 3.0 * f4) / (12.0 * spacing);
}

}  // namespace tjf
