#pragma once

#include "tjf/jacobi.hpp"
#include "tjf/report.hpp"

#include <array>
#include <memory>
#include <vector>

namespace tjf {

// A subspace 𝕍 of a family, given by coefficient columns (m × dim 𝕍) in the
// family basis.
struct SubfamilySpec {
  FamilyPtr family;
  Mat coefficients;
};

// Validates the coefficient rank (threshold kRankTol).
SubfamilySpec make_subfamily(FamilyPtr family, Mat coefficients);

struct SplitOptions {
  int window_half_width = 5;  // in steps, around each zero of a 𝕍 member
  double zero_threshold = 1e-6;
};

// The splitting ċ^⊥ = T^v ⊕ T^⊥ along the path induced by a subspace 𝕍 of a
// self-adjoint family. Everything is expressed in the bundle frame (an
// orthonormal frame of ċ^⊥), so inner products are Euclidean.
class TransversalSplit {
 public:
  const JacobiFamily& family() const { return *family_; }
  const FamilyPtr& family_ptr() const { return family_; }
  const Mat& coefficients() const { return coeff_; }
  int vertical_dim() const { return static_cast<int>(coeff_.cols()); }
  int transversal_dim() const { return family_->rank() - vertical_dim(); }
  std::size_t size() const { return vertical_.size(); }

  // Orthonormal bases, aligned between consecutive samples.
  const Mat& vertical_basis(std::size_t k) const { return vertical_[k]; }
  const Mat& transversal_basis(std::size_t k) const { return transversal_[k]; }
  Mat transversal_projector(std::size_t k) const {
    return transversal_[k] * transversal_[k].transpose();
  }
  // A_t as an endomorphism of ċ^⊥ that maps T^v to T^⊥ and kills T^⊥.
  const Mat& a_full(std::size_t k) const { return a_[k]; }
  // A_t from T^v to T^⊥ in the aligned bases (dim T^⊥ × dim T^v).
  Mat a_matrix(std::size_t k) const {
    return transversal_[k].transpose() * a_[k] * vertical_[k];
  }
  // ⊥-parallel orthonormal frame of T^⊥, one column per frame field.
  const Mat& perp_frame(std::size_t k) const { return frame_[k]; }

  const std::vector<Window>& windows() const { return windows_; }
  const std::vector<ZeroEvent>& zeros() const { return zeros_; }
  bool in_window(std::size_t k) const { return window_of_[k] >= 0; }
  // Index of the window containing t, or -1.
  int window_at(double t) const;

  // A_t at an arbitrary parameter (extrapolated inside windows).
  Mat a_at(double t) const;

  // max over samples of |dim T^v + dim T^⊥ - (n-1)|, basis orthonormality and
  // mutual orthogonality defects.
  double basis_defect() const;
  int dimension_defect() const;
  double sup_a() const;

 private:
  friend std::shared_ptr<const TransversalSplit> build_split(const SubfamilySpec&,
                                                             const SplitOptions&);
  Mat a_direct(double t) const;
  Mat a_extrapolated(int window, double t) const;

  FamilyPtr family_;
  Mat coeff_;
  std::vector<Mat> vertical_, transversal_, a_, frame_;
  std::vector<int> window_of_;
  std::vector<Window> windows_;
  std::vector<ZeroEvent> zeros_;
  // Per window: three sample indices outside it used for extrapolation.
  std::vector<std::array<std::size_t, 3>> stencil_;
};

using SplitPtr = std::shared_ptr<const TransversalSplit>;

SplitPtr build_split(const SubfamilySpec& v, const SplitOptions& opts = {});

// A_t at parameter t (see TransversalSplit::a_at).
Mat a_operator(const TransversalSplit& split, double t);

struct TransversalResidual {
  double residual = 0.0;  // with the O'Neill term
  double control = 0.0;   // without it
  double sup_a = 0.0;
  // Range of the modified curvature quadratic form on Y / |Y| and of its two parts.
  double curvature_min = 0.0, curvature_max = 0.0;
  double tangential_min = 0.0, tangential_max = 0.0;  // <(R(Y,ċ)ċ)^⊥, Y> / |Y|²
  double oneill_min = 0.0, oneill_max = 0.0;          // 3 |A* Y|² / |Y|²
  std::size_t checked = 0;
  std::size_t trimmed = 0;
};

// Residual of the transversal Jacobi equation for J = Y·c (c a coefficient
// vector outside 𝕍). Y = J^⊥ is expanded in the ⊥-parallel frame; second
// derivatives by a 7-point stencil of spacing one step. Samples whose stencil
// meets a singular window, and 20 samples at each end, are skipped.
TransversalResidual transversal_residual(const TransversalSplit& split, const VectorXd& c);
ResidualReport transversal_report(const TransversalSplit& split, const VectorXd& c,
                                  double tolerance = 1e-5);

struct FirstOrderResidual {
  double derivative_identity = 0.0;  // |(J')^v - A* J| for J(t) ∈ T^⊥
  double frame_identity = 0.0;       // |X' + A* X|
  double frame_normal = 0.0;         // |(X')^⊥|
};

// Both first-order identities over the samples outside singular windows, for
// every member of a basis of the complement of 𝕍.
FirstOrderResidual first_order_residual(const TransversalSplit& split);
ResidualReport first_order_report(const TransversalSplit& split, double tolerance = 1e-6);

// Smallest eigenvalue of 3 A A* on T^⊥ over all samples (and the largest).
struct OneillSpectrum {
  double min = 0.0;
  double max = 0.0;
};
OneillSpectrum oneill_spectrum(const TransversalSplit& split);
ResidualReport oneill_psd_check(const TransversalSplit& split, double tolerance = 1e-10);

}  // namespace tjf
