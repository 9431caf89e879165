#include "tjf/decomposition.hpp"

#include "tjf/transversal.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace tjf {

Mat vanishing_subfamily(const JacobiFamily& family, double eps) {
  const int m = family.members();
  const auto zeros = find_zeros(family, Mat::Identity(m, m), eps);
  int total = 0;
  for (const auto& z : zeros) total += static_cast<int>(z.null_directions.cols());
  if (total == 0) return Mat(m, 0);
  // Different zeros of the same field give nearly equal directions; the
  // Brent-refined null vectors agree to far better than 1e-4.
  MatrixXd all(m, total);
  int col = 0;
  for (const auto& z : zeros) {
    all.middleCols(col, z.null_directions.cols()) = z.null_directions;
    col += static_cast<int>(z.null_directions.cols());
  }
  Eigen::JacobiSVD<MatrixXd> svd(all, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  int rank = 0;
  while (rank < s.size() && s[rank] > 1e-4 * s[0]) ++rank;
  return svd.matrixU().leftCols(rank);
}

Mat parallel_subfamily(const JacobiFamily& family, double eps) {
  const int m = family.members();
  Mat a = Mat::Zero(m, m), b = Mat::Zero(m, m);
  for (std::size_t k = 0; k < family.size(); ++k) {
    a.noalias() += family.derivative(k).transpose() * family.derivative(k);
    b.noalias() += family.value(k).transpose() * family.value(k);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(a, b);
  if (ges.info() != Eigen::Success)
    throw NumericalError("parallel detection: sampled value Gram matrix is not definite");
  const auto& lambda = ges.eigenvalues();
  Mat cols(m, 0);
  for (int i = 0; i < m; ++i)
    if (std::sqrt(std::max(0.0, lambda[i])) <= eps) {
      cols.conservativeResize(m, cols.cols() + 1);
      cols.col(cols.cols() - 1) = ges.eigenvectors().col(i);
    }
  return cols.cols() ? orthonormal_basis(cols, 1e-10) : cols;
}

HypothesisCheck check_nonnegative_curvature(const GeodesicPath& path, std::uint64_t seed,
                                            std::size_t points, std::size_t planes,
                                            double tolerance) {
  const Manifold& m = path.manifold();
  const int n = m.dim();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  HypothesisCheck out;
  out.min_sectional = std::numeric_limits<double>::infinity();
  const std::size_t count = std::min(points, path.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = count > 1 ? i * (path.size() - 1) / (count - 1) : 0;
    const Vec& x = path.point(k);
    const Mat g = m.metric(x);
    const Tensor4 r = m.curvature(x);
    for (std::size_t j = 0; j < planes; ++j) {
      Vec u(n), v(n);
      for (int c = 0; c < n; ++c) u[c] = normal(rng);
      for (int c = 0; c < n; ++c) v[c] = normal(rng);
      const double gram = inner(g, u, u) * inner(g, v, v) - std::pow(inner(g, u, v), 2);
      if (gram <= 1e-12 * inner(g, u, u) * inner(g, v, v)) continue;
      const double k_uv = inner(g, contract(r, u, v, v), u) / gram;
      out.min_sectional = std::min(out.min_sectional, k_uv);
      ++out.planes;
    }
    ++out.points;
  }
  out.satisfied = out.min_sectional >= -tolerance;
  return out;
}

namespace {

// max_t |<J_a, J_b>| over a basis of each subfamily, with every field scaled
// to unit supremum norm.
double pointwise_orthogonality(const JacobiFamily& family, const Mat& ca, const Mat& cb) {
  if (ca.cols() == 0 || cb.cols() == 0) return 0.0;
  Vec sa = Vec::Zero(ca.cols()), sb = Vec::Zero(cb.cols());
  for (std::size_t k = 0; k < family.size(); ++k) {
    sa = sa.cwiseMax((family.value(k) * ca).colwise().norm().transpose());
    sb = sb.cwiseMax((family.value(k) * cb).colwise().norm().transpose());
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const Mat ya = family.value(k) * ca * sa.cwiseInverse().asDiagonal();
    const Mat yb = family.value(k) * cb * sb.cwiseInverse().asDiagonal();
    worst = std::max(worst, (ya.transpose() * yb).cwiseAbs().maxCoeff());
  }
  return worst;
}

// Cosine of the smallest principal angle between the two subfamilies in the
// inner product of stacked initial data.
double direct_sum_cosine(const JacobiFamily& family, const Mat& ca, const Mat& cb) {
  if (ca.cols() == 0 || cb.cols() == 0) return 0.0;
  const int r = family.rank();
  MatrixXd stack(2 * r, family.members());
  stack << family.initial_values(), family.initial_derivatives();
  auto orth = [](const MatrixXd& x) {
    Eigen::JacobiSVD<MatrixXd> svd(x, Eigen::ComputeThinU);
    return MatrixXd(svd.matrixU());
  };
  const MatrixXd qa = orth(stack * ca), qb = orth(stack * cb);
  Eigen::JacobiSVD<MatrixXd> svd(qa.transpose() * qb);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

// sup_t |L(t)| for the family itself (no vanishing part).
double family_riccati_sup(const JacobiFamily& family, const Mat& c) {
  double worst = 0.0;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const Mat y = family.value(k) * c, yp = family.derivative(k) * c;
    Eigen::FullPivLU<Mat> lu(y.transpose());
    if (!lu.isInvertible())
      throw NumericalError("quotient family is singular at t = " +
                           std::to_string(family.path().time(k)));
    const Mat l = lu.solve(yp.transpose()).transpose();
    worst = std::max(worst, l.norm());
  }
  return worst;
}

// sup_t |L| of the quotient J/V, represented by the ⊥-components of the
// complement fields in a ⊥-parallel frame. Samples in singular windows are skipped.
double quotient_riccati_sup(const FamilyPtr& family, const Mat& vanishing, const Mat& complement,
                            std::vector<Window>& windows) {
  const SplitPtr split = build_split(make_subfamily(family, vanishing));
  windows = split->windows();
  double worst = 0.0;
  for (std::size_t k = 0; k < split->size(); ++k) {
    if (split->in_window(k)) continue;
    const Mat& x = split->perp_frame(k);
    const Mat y = family->value(k) * complement;
    const Mat yp = family->derivative(k) * complement;
    const Mat yq = x.transpose() * y;
    const Mat yqp = x.transpose() * (yp - split->a_full(k) * y);
    Eigen::FullPivLU<Mat> lu(yq.transpose());
    if (!lu.isInvertible()) continue;
    worst = std::max(worst, lu.solve(yqp.transpose()).norm());
  }
  return worst;
}

std::string dims_text(int a, int b) {
  std::ostringstream os;
  os << "dims=(" << a << "," << b << ")";
  return os.str();
}

}  // namespace

DecompositionReport verify_decomposition(const FamilyPtr& family, const DecompositionOptions& opts) {
  if (!family->self_adjoint())
    throw PreconditionError("decomposition needs a self-adjoint family");
  DecompositionReport rep;
  rep.family = family;
  rep.checks = ResidualReport("decomposition");
  rep.hypothesis = check_nonnegative_curvature(family->path(), opts.hypothesis_seed);
  if (!rep.hypothesis.satisfied) {
    rep.status = DecompositionStatus::inapplicable;
    rep.reason = "hypothesis failure: negative curvature (min sectional " +
                 format_number(rep.hypothesis.min_sectional) + ")";
    rep.checks.add("decomposition.hypothesis_min_sectional", rep.hypothesis.min_sectional,
                   -1e-8, Bound::lower, {},
                   "points=" + std::to_string(rep.hypothesis.points) +
                       " planes=" + std::to_string(rep.hypothesis.planes));
    rep.checks.note(rep.reason);
    return rep;
  }

  const int m = family->members();
  rep.vanishing = vanishing_subfamily(*family, opts.null_tolerance);
  rep.parallel = parallel_subfamily(*family, opts.null_tolerance);
  rep.dim_vanishing = static_cast<int>(rep.vanishing.cols());
  rep.dim_parallel = static_cast<int>(rep.parallel.cols());
  rep.dimension_defect = rep.dim_vanishing + rep.dim_parallel - m;
  rep.direct_sum_defect = direct_sum_cosine(*family, rep.vanishing, rep.parallel);
  rep.orthogonality_defect = pointwise_orthogonality(*family, rep.vanishing, rep.parallel);

  const std::string dims = dims_text(rep.dim_vanishing, rep.dim_parallel);
  rep.checks.add("decomposition.dimension_defect", std::abs(rep.dimension_defect), 0.0,
                 Bound::upper, {}, dims);
  rep.checks.add("decomposition.direct_sum", rep.direct_sum_defect, opts.direct_sum_tolerance);
  rep.checks.add("decomposition.orthogonality", rep.orthogonality_defect,
                 opts.orthogonality_tolerance);

  if (rep.dim_vanishing < m) {
    Mat complement = rep.parallel;
    if (rep.dimension_defect != 0)
      complement = orthonormal_complement(rep.vanishing, m);
    rep.quotient_checked = true;
    std::vector<Window> excluded;
    rep.quotient_riccati =
        rep.dim_vanishing == 0
            ? family_riccati_sup(*family, complement)
            : quotient_riccati_sup(family, rep.vanishing, complement, excluded);
    rep.checks.add("decomposition.quotient_riccati", rep.quotient_riccati, opts.riccati_tolerance,
                   Bound::upper, std::move(excluded));
  } else {
    rep.checks.note("vanishing span is the whole family; quotient is trivial");
  }
  return rep;
}

}  // namespace tjf
