#include "tjf/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace tjf {

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

Vec contract(const Tensor3& gamma, const Vec& u, const Vec& w) {
  const int n = gamma.dim();
  Vec out = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      if (u[i] == 0.0) continue;
      for (int j = 0; j < n; ++j) s += gamma(k, i, j) * u[i] * w[j];
    }
    out[k] = s;
  }
  return out;
}

Vec contract(const Tensor4& r, const Vec& u, const Vec& v, const Vec& w) {
  const int n = r.dim();
  Vec out = Vec::Zero(n);
  for (int l = 0; l < n; ++l) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      if (u[i] == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        if (v[j] == 0.0) continue;
        for (int k = 0; k < n; ++k) s += r(l, i, j, k) * u[i] * v[j] * w[k];
      }
    }
    out[l] = s;
  }
  return out;
}

Mat orthonormal_basis(const Mat& cols, double rel_tol, double abs_tol) {
  if (cols.cols() == 0) return Mat(cols.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(cols, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double cut = std::max(abs_tol, rel_tol * (s.size() ? s[0] : 0.0));
  int r = 0;
  while (r < s.size() && s[r] > cut) ++r;
  return svd.matrixU().leftCols(r);
}

Mat orthonormal_complement(const Mat& basis, int dim) {
  Mat proj = Mat::Identity(dim, dim);
  if (basis.cols() > 0) proj -= basis * basis.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> eig(proj);
  const int want = dim - static_cast<int>(basis.cols());
  // Eigenvalues are ascending; the complement carries eigenvalue 1.
  return eig.eigenvectors().rightCols(want);
}

Mat polar_factor(const Mat& m) {
  if (m.size() == 0) return m;
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

Mat align_basis(const Mat& basis, const Mat& reference) {
  if (basis.cols() == 0) return basis;
  return basis * polar_factor(basis.transpose() * reference);
}

MatrixXd near_null_space(const MatrixXd& m, double rel_tol, double abs_tol) {
  const auto cols = m.cols();
  if (cols == 0) return MatrixXd(0, 0);
  // Inputs are tall stacks with few columns: reduce to the triangular factor first.
  MatrixXd r;
  if (m.rows() > cols) {
    Eigen::HouseholderQR<MatrixXd> qr(m);
    r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  } else {
    r = m;
  }
  Eigen::JacobiSVD<MatrixXd> svd(r, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double largest = s.size() ? s[0] : 0.0;
  const double cut = std::max(abs_tol, rel_tol * largest);
  // Columns beyond the row count are null directions by construction.
  int nonzero = 0;
  while (nonzero < s.size() && s[nonzero] > cut) ++nonzero;
  return svd.matrixV().rightCols(cols - nonzero);
}

SingularRange singular_range(const Mat& m) {
  if (m.size() == 0) return {};
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (m.cols() > m.rows()) return {0.0, s[0]};
  return {s[s.size() - 1], s[0]};
}

}  // namespace tjf
