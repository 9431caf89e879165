#pragma once

#include "tjf/foliation.hpp"
#include "tjf/geodesic.hpp"

#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

namespace tjf {

// A parallel g-orthonormal frame E_1..E_{n-1} of ċ^⊥ along a path together with
// the curvature matrix K_ab(t) = <R(E_a, ċ)ċ, E_b> at samples and at the
// midpoints between consecutive samples. All Jacobi data downstream is stored
// in this frame, where the Jacobi equation reads Y'' + K Y = 0.
class NormalBundle {
 public:
  explicit NormalBundle(PathPtr path);

  const GeodesicPath& path() const { return *path_; }
  const PathPtr& path_ptr() const { return path_; }
  int rank() const { return rank_; }
  std::size_t size() const { return path_->size(); }

  // n × (n-1) frame in tangent components.
  const Mat& frame(std::size_t k) const { return frame_->at(k); }
  Mat frame_at(double t) const { return frame_->evaluate(t); }
  const Mat& curvature(std::size_t k) const { return k_[k]; }
  // K at (t_k + t_{k+1}) / 2.
  const Mat& curvature_mid(std::size_t k) const { return k_mid_[k]; }

  // Frame coordinates of a tangent vector at sample k, and back.
  Vec coordinates(std::size_t k, const Vec& w) const;
  Vec tangent(std::size_t k, const Vec& y) const { return frame(k) * y; }

  // Largest deviation of the frame Gram matrix from the identity and of <E_a, ċ> from 0.
  double frame_defect() const;

 private:
  PathPtr path_;
  int rank_;
  FramePtr frame_;
  std::vector<Mat> k_, k_mid_;
};

using BundlePtr = std::shared_ptr<const NormalBundle>;

BundlePtr make_bundle(PathPtr path);

struct ZeroEvent {
  double t = 0.0;
  std::size_t index = 0;  // sample nearest to t
  // Orthonormal coefficient vectors (in the combination space) vanishing at t.
  Mat null_directions;
};

// m normal Jacobi fields along a common path. Values Y(t_k) and covariant
// derivatives Y'(t_k) are (n-1) × m matrices in the bundle frame.
class JacobiFamily {
 public:
  JacobiFamily(BundlePtr bundle, Mat values0, Mat derivatives0);

  const NormalBundle& bundle() const { return *bundle_; }
  const BundlePtr& bundle_ptr() const { return bundle_; }
  const GeodesicPath& path() const { return bundle_->path(); }
  int members() const { return static_cast<int>(y0_.cols()); }
  int rank() const { return bundle_->rank(); }
  std::size_t size() const { return y_.size(); }

  const Mat& initial_values() const { return y0_; }
  const Mat& initial_derivatives() const { return yp0_; }
  const Mat& value(std::size_t k) const { return y_[k]; }
  const Mat& derivative(std::size_t k) const { return yp_[k]; }

  // Quintic Hermite interpolant built from Y, Y' and Y'' = -K Y; exact at nodes.
  std::pair<Mat, Mat> evaluate(double t) const;

  // Ω_ab = <J_a', J_b> - <J_a, J_b'> at t = 0 and at sample k.
  const Mat& omega() const { return omega_; }
  Mat omega_at(std::size_t k) const;
  // Product of the two largest column norms of the stacked initial data.
  double omega_scale() const { return omega_scale_; }
  bool self_adjoint() const { return self_adjoint_; }
  // Largest |Ω(t_k) - Ω(0)| over all samples.
  double omega_drift() const;

  // Largest |Y'' + K Y| over samples, with Y'' from a central 5-point stencil
  // of spacing 10·step; relative to the largest value.
  double ode_residual() const;

  // Columns: t, then for each member a: y_a_1..y_a_{n-1}, dy_a_1..dy_a_{n-1}.
  void write_csv(std::ostream& os) const;

 private:
  BundlePtr bundle_;
  Mat y0_, yp0_;
  std::vector<Mat> y_, yp_;
  Mat omega_;
  double omega_scale_ = 0.0;
  bool self_adjoint_ = false;
};

using FamilyPtr = std::shared_ptr<const JacobiFamily>;

// A single Jacobi field, stored as a one-member family.
class JacobiField {
 public:
  explicit JacobiField(FamilyPtr family) : family_(std::move(family)) {}
  const JacobiFamily& family() const { return *family_; }
  const FamilyPtr& family_ptr() const { return family_; }
  std::size_t size() const { return family_->size(); }
  Vec value(std::size_t k) const { return family_->value(k).col(0); }
  Vec derivative(std::size_t k) const { return family_->derivative(k).col(0); }
  // Tangent components of J(t_k) and J'(t_k).
  Vec tangent_value(std::size_t k) const;
  Vec tangent_derivative(std::size_t k) const;

 private:
  FamilyPtr family_;
};

struct JacobiInit {
  Vec value;       // J(0), tangent components
  Vec derivative;  // J'(0), tangent components
};

// Tolerances of the family invariants.
inline constexpr double kNormalityTol = 1e-10;
inline constexpr double kRankTol = 1e-8;
inline constexpr double kSelfAdjointTol = 1e-9;
inline constexpr double kRiccatiSingularTol = 1e-8;

JacobiField integrate_jacobi(const PathPtr& path, const Vec& j0, const Vec& j0p);
JacobiField integrate_jacobi(const BundlePtr& bundle, const Vec& j0, const Vec& j0p);

// Requires exactly n-1 normal entries with linearly independent initial data.
FamilyPtr make_family(const PathPtr& path, const std::vector<JacobiInit>& inits);
FamilyPtr make_family(const BundlePtr& bundle, const std::vector<JacobiInit>& inits);
// Same, with initial data already in bundle-frame coordinates.
FamilyPtr make_family_frame(const BundlePtr& bundle, const Mat& values0, const Mat& derivatives0);

struct RiccatiOperator {
  double t = 0.0;
  bool singular = true;
  Mat matrix;  // empty when singular
};

// L(t) = Y'(t) Y(t)^{-1} when the value matrix is invertible.
RiccatiOperator riccati_at(const JacobiFamily& family, double t);
RiccatiOperator riccati_at_sample(const JacobiFamily& family, std::size_t k);

// Parameters where some combination Y(t)·c of the given coefficient columns
// vanishes: local minima of the smallest singular value on the grid, refined
// on the interpolant and accepted below rel_threshold times the largest value
// of the combination over the path.
std::vector<ZeroEvent> find_zeros(const JacobiFamily& family, const Mat& combinations,
                                  double rel_threshold = 1e-6);

// Family of Jacobi fields from geodesics leaving the leaf through c(0)
// perpendicularly: leaf-tangent fields with J'(0) given by the shape operator,
// completed by fields vanishing at 0 with J'(0) in ν ∩ ċ^⊥.
FamilyPtr family_from_foliation(const PathPtr& path, const FoliationSpec& fol);

// Normal parts of restrictions of Killing fields, completed by fields vanishing
// at 0 on the complement of their values.
FamilyPtr family_from_killing(const PathPtr& path, const std::vector<VectorField>& fields);

// Max over a subsample of the path of the symmetrized covariant derivative of X,
// relative to max(1, |X|).
double killing_defect(const GeodesicPath& path, const VectorField& field);

}  // namespace tjf
