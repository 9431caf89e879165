#pragma once

#include "tjf/jacobi.hpp"
#include "tjf/report.hpp"

#include <cstdint>
#include <string>

namespace tjf {

// Singular values below this fraction of the largest count as zero, both for
// vanishing and for parallel detection.
inline constexpr double kDecompositionNullTol = 1e-7;

// Coefficient basis (orthonormal columns in the family basis) of the span of
// all combinations that vanish somewhere on the path.
Mat vanishing_subfamily(const JacobiFamily& family, double eps = kDecompositionNullTol);

// Coefficient basis of the combinations J with sup |J'| <= eps · sup |J|, in
// the sample root-mean-square sense.
Mat parallel_subfamily(const JacobiFamily& family, double eps = kDecompositionNullTol);

struct HypothesisCheck {
  bool satisfied = true;
  double min_sectional = 0.0;
  std::size_t points = 0;
  std::size_t planes = 0;
};

// Sectional curvature on `planes` random planes at `points` path samples.
HypothesisCheck check_nonnegative_curvature(const GeodesicPath& path, std::uint64_t seed = 6,
                                            std::size_t points = 200, std::size_t planes = 50,
                                            double tolerance = 1e-8);

enum class DecompositionStatus { checked, inapplicable };

struct DecompositionReport {
  DecompositionStatus status = DecompositionStatus::checked;
  std::string reason;  // set when inapplicable
  FamilyPtr family;
  HypothesisCheck hypothesis;
  Mat vanishing;  // coefficient basis of V_span
  Mat parallel;   // coefficient basis of P_par
  int dim_vanishing = 0;
  int dim_parallel = 0;
  int dimension_defect = 0;       // dim V_span + dim P_par - m
  double direct_sum_defect = 0.0; // cosine of the smallest principal angle
  double orthogonality_defect = 0.0;
  double quotient_riccati = 0.0;  // sup_t |L| of the quotient family
  bool quotient_checked = false;
  ResidualReport checks;
};

struct DecompositionOptions {
  double null_tolerance = kDecompositionNullTol;
  double direct_sum_tolerance = 1e-6;
  double orthogonality_tolerance = 1e-6;
  double riccati_tolerance = 1e-5;
  std::uint64_t hypothesis_seed = 6;
};

// Splits a self-adjoint family into vanishing and parallel parts and checks
// the direct sum, pointwise orthogonality and the quotient Riccati operator.
// Throws PreconditionError for a family that is not self-adjoint.
DecompositionReport verify_decomposition(const FamilyPtr& family,
                                         const DecompositionOptions& opts = {});

}  // namespace tjf
