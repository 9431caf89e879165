#include "tjf/transversal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tjf {

namespace {

// Stencil spacing in steps. One step resolves |A| up to about 20 at step 1e-3
// while round-off in the second difference stays near 1e-8.
constexpr std::size_t kStencilSpan = 1;
constexpr std::size_t kTrim = 20;

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Orthonormal basis U of range(vm), and A = P⊥ vd vm⁺ with P⊥ = I - U Uᵀ.
struct DirectSplit {
  Mat vertical;
  Mat a;
  double smin = 0.0, smax = 0.0;
};

DirectSplit direct_split(const Mat& vm, const Mat& vd) {
  const int r = static_cast<int>(vm.rows()), k = static_cast<int>(vm.cols());
  DirectSplit out;
  out.a = Mat::Zero(r, r);
  if (k == 0) {
    out.vertical = Mat(r, 0);
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(vm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  out.smax = s[0];
  out.smin = s[k - 1];
  out.vertical = svd.matrixU();
  const Mat perp = Mat::Identity(r, r) - out.vertical * out.vertical.transpose();
  Mat pinv = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  out.a = perp * vd * pinv;
  return out;
}

double lagrange3(double t, const std::array<double, 3>& ts, int i) {
  double w = 1.0;
  for (int j = 0; j < 3; ++j)
    if (j != i) w *= (t - ts[static_cast<std::size_t>(j)]) / (ts[static_cast<std::size_t>(i)] - ts[static_cast<std::size_t>(j)]);
  return w;
}

}  // namespace

SubfamilySpec make_subfamily(FamilyPtr family, Mat coefficients) {
  if (coefficients.rows() != family->members())
    throw PreconditionError("subspace coefficients need one row per family member");
  if (coefficients.cols() > 0) {
    const SingularRange sv = singular_range(coefficients);
    if (!(sv.min >= kRankTol * sv.max))
      throw PreconditionError("subspace coefficient matrix is rank deficient");
  }
  return {std::move(family), std::move(coefficients)};
}

int TransversalSplit::window_at(double t) const {
  for (std::size_t w = 0; w < windows_.size(); ++w)
    if (t >= windows_[w].begin && t <= windows_[w].end) return static_cast<int>(w);
  return -1;
}

Mat TransversalSplit::a_direct(double t) const {
  const auto [y, yp] = family_->evaluate(t);
  return direct_split(y * coeff_, yp * coeff_).a;
}

Mat TransversalSplit::a_extrapolated(int window, double t) const {
  const auto& idx = stencil_[static_cast<std::size_t>(window)];
  const GeodesicPath& path = family_->path();
  const std::array<double, 3> ts = {path.time(idx[0]), path.time(idx[1]), path.time(idx[2])};
  Mat out = Mat::Zero(a_[idx[0]].rows(), a_[idx[0]].cols());
  for (int i = 0; i < 3; ++i) out += lagrange3(t, ts, i) * a_[idx[static_cast<std::size_t>(i)]];
  return out;
}

Mat TransversalSplit::a_at(double t) const {
  const int w = window_at(t);
  return w >= 0 ? a_extrapolated(w, t) : a_direct(t);
}

Mat a_operator(const TransversalSplit& split, double t) { return split.a_at(t); }

double TransversalSplit::basis_defect() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    const Mat& v = vertical_[k];
    const Mat& p = transversal_[k];
    if (v.cols() > 0)
      worst = std::max(worst, max_abs(v.transpose() * v - Mat::Identity(v.cols(), v.cols())));
    if (p.cols() > 0)
      worst = std::max(worst, max_abs(p.transpose() * p - Mat::Identity(p.cols(), p.cols())));
    if (v.cols() > 0 && p.cols() > 0) worst = std::max(worst, max_abs(v.transpose() * p));
  }
  return worst;
}

int TransversalSplit::dimension_defect() const {
  int worst = 0;
  const int r = family_->rank();
  for (std::size_t k = 0; k < size(); ++k)
    worst = std::max(worst, std::abs(static_cast<int>(vertical_[k].cols() + transversal_[k].cols()) - r));
  return worst;
}

double TransversalSplit::sup_a() const {
  double worst = 0.0;
  for (const auto& a : a_) {
    if (a.size() == 0) continue;
    Eigen::JacobiSVD<Mat> svd(a);
    worst = std::max(worst, svd.singularValues()[0]);
  }
  return worst;
}

SplitPtr build_split(const SubfamilySpec& spec, const SplitOptions& opts) {
  const JacobiFamily& family = *spec.family;
  if (!family.self_adjoint()) {
    Eigen::Index i = 0, j = 0;
    const double worst = family.omega().cwiseAbs().maxCoeff(&i, &j);
    throw PreconditionError("family is not self-adjoint: |Omega(" + std::to_string(i + 1) + "," +
                            std::to_string(j + 1) + ")| = " + format_number(worst) +
                            " exceeds " + format_number(kSelfAdjointTol * family.omega_scale()));
  }
  const int r = family.rank(), m = family.members(), kdim = static_cast<int>(spec.coefficients.cols());
  if (spec.coefficients.rows() != m)
    throw PreconditionError("subspace coefficients need one row per family member");
  if (kdim >= m) throw PreconditionError("the subspace must be a proper subspace of the family");

  auto split = std::shared_ptr<TransversalSplit>(new TransversalSplit());
  split->family_ = spec.family;
  split->coeff_ = spec.coefficients;
  const Mat& c = split->coeff_;
  const GeodesicPath& path = family.path();
  const std::size_t count = family.size(), base = path.base_index();
  const double h = path.step();

  // Singular windows around zeros of 𝕍 members; overlapping windows merge.
  std::vector<int> window_zero;  // zero event used for the T^v limit in each window
  if (kdim > 0) {
    split->zeros_ = find_zeros(family, c, opts.zero_threshold);
    const double half = opts.window_half_width * h;
    for (std::size_t z = 0; z < split->zeros_.size(); ++z) {
      const double t = split->zeros_[z].t;
      if (!split->windows_.empty() && t - half <= split->windows_.back().end) {
        split->windows_.back().end = t + half;
        continue;
      }
      split->windows_.push_back({t - half, t + half});
      window_zero.push_back(static_cast<int>(z));
    }
  }
  split->window_of_.assign(count, -1);
  for (std::size_t k = 0; k < count; ++k) split->window_of_[k] = split->window_at(path.time(k));
  auto nearest_zero = [&](double t) -> const ZeroEvent& {
    std::size_t best = 0;
    for (std::size_t z = 1; z < split->zeros_.size(); ++z)
      if (std::abs(split->zeros_[z].t - t) < std::abs(split->zeros_[best].t - t)) best = z;
    return split->zeros_[best];
  };

  split->vertical_.resize(count);
  split->transversal_.resize(count);
  split->a_.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Mat vm = family.value(k) * c;
    const Mat vd = family.derivative(k) * c;
    Mat vertical;
    if (!split->in_window(k)) {
      DirectSplit ds = direct_split(vm, vd);
      if (kdim > 0 && !(ds.smin >= kRankTol * ds.smax))
        throw NumericalError("values of the subspace collapse in rank at t = " +
                             std::to_string(path.time(k)) + " outside the singular windows");
      vertical = std::move(ds.vertical);
      split->a_[k] = std::move(ds.a);
    } else {
      // Limit space: values of the non-vanishing combinations plus derivatives
      // of the vanishing ones.
      const ZeroEvent& z = nearest_zero(path.time(k));
      const Mat& null = z.null_directions;
      const Mat keep = orthonormal_complement(null, kdim);
      const double dt = path.time(k) - z.t;
      Mat cols(r, kdim);
      cols.leftCols(keep.cols()) = vm * keep;
      const auto [yz, ypz] = family.evaluate(z.t);
      if (std::abs(dt) <= 1e-6)
        cols.rightCols(null.cols()) = ypz * c * null;
      else
        cols.rightCols(null.cols()) = (vm * null - yz * c * null) / dt;
      vertical = orthonormal_basis(cols, 1e-8);
      if (vertical.cols() != kdim)
        throw NumericalError("vertical space loses rank inside the singular window at t = " +
                             std::to_string(z.t));
      split->a_[k] = Mat::Zero(r, r);
    }
    split->vertical_[k] = std::move(vertical);
    split->transversal_[k] = orthonormal_complement(split->vertical_[k], r);
  }

  // Procrustes alignment outward from the base sample.
  for (std::size_t k = base + 1; k < count; ++k) {
    split->vertical_[k] = align_basis(split->vertical_[k], split->vertical_[k - 1]);
    split->transversal_[k] = align_basis(split->transversal_[k], split->transversal_[k - 1]);
  }
  for (std::size_t k = base; k-- > 0;) {
    split->vertical_[k] = align_basis(split->vertical_[k], split->vertical_[k + 1]);
    split->transversal_[k] = align_basis(split->transversal_[k], split->transversal_[k + 1]);
  }

  // Continuous extension of A into the windows by quadratic extrapolation
  // from the three samples just outside (left side preferred).
  split->stencil_.resize(split->windows_.size());
  for (std::size_t w = 0; w < split->windows_.size(); ++w) {
    std::size_t first = count, last = 0;
    for (std::size_t k = 0; k < count; ++k)
      if (split->window_of_[k] == static_cast<int>(w)) {
        first = std::min(first, k);
        last = std::max(last, k);
      }
    auto usable = [&](long k) {
      return k >= 0 && k < static_cast<long>(count) && !split->in_window(static_cast<std::size_t>(k));
    };
    const long f = first == count ? -1 : static_cast<long>(first);
    const long l = first == count ? -1 : static_cast<long>(last);
    if (first == count) {
      // Window between samples: nothing to fill, but keep a usable stencil.
      const double mid = 0.5 * (split->windows_[w].begin + split->windows_[w].end);
      const long k0 = static_cast<long>(path.nearest_index(mid));
      if (usable(k0 - 3) && usable(k0 - 2) && usable(k0 - 1))
        split->stencil_[w] = {static_cast<std::size_t>(k0 - 1), static_cast<std::size_t>(k0 - 2),
                              static_cast<std::size_t>(k0 - 3)};
      else
        split->stencil_[w] = {static_cast<std::size_t>(k0 + 1), static_cast<std::size_t>(k0 + 2),
                              static_cast<std::size_t>(k0 + 3)};
      continue;
    }
    if (usable(f - 1) && usable(f - 2) && usable(f - 3))
      split->stencil_[w] = {static_cast<std::size_t>(f - 1), static_cast<std::size_t>(f - 2),
                            static_cast<std::size_t>(f - 3)};
    else if (usable(l + 1) && usable(l + 2) && usable(l + 3))
      split->stencil_[w] = {static_cast<std::size_t>(l + 1), static_cast<std::size_t>(l + 2),
                            static_cast<std::size_t>(l + 3)};
    else
      throw NumericalError("no room to extend A across the singular window at t = " +
                           std::to_string(split->zeros_[static_cast<std::size_t>(window_zero[w])].t));
    for (std::size_t k = first; k <= last; ++k)
      split->a_[k] = split->a_extrapolated(static_cast<int>(w), path.time(k));
  }

  // ⊥-parallel frame: X' = -Aᵀ X, RK4 with A at nodes and midpoints.
  const int d = r - kdim;
  split->frame_.resize(count);
  split->frame_[base] = split->transversal_[base];
  auto step = [&](std::size_t from, std::size_t to) {
    const double dt = path.time(to) - path.time(from);
    const double tm = 0.5 * (path.time(from) + path.time(to));
    const Mat a0 = split->a_[from].transpose();
    const Mat am = split->a_at(tm).transpose();
    const Mat a1 = split->a_[to].transpose();
    const Mat& x = split->frame_[from];
    const Mat k1 = -a0 * x;
    const Mat k2 = -am * (x + 0.5 * dt * k1);
    const Mat k3 = -am * (x + 0.5 * dt * k2);
    const Mat k4 = -a1 * (x + dt * k3);
    Mat next = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    if (split->in_window(from) && !split->in_window(to) && d > 0) {
      // Leaving a window: remove the small drift out of T^⊥ caused by the extrapolated A.
      const Mat& p = split->transversal_[to];
      next = p * polar_factor(p.transpose() * next);
    }
    split->frame_[to] = std::move(next);
  };
  if (d > 0) {
    for (std::size_t k = base; k + 1 < count; ++k) step(k, k + 1);
    for (std::size_t k = base; k > 0; --k) step(k, k - 1);
  } else {
    for (auto& f : split->frame_) f = Mat(r, 0);
  }
  return split;
}

// ---------------------------------------------------------------------------
// Residuals

namespace {

// True when none of the stencil points around k lie in a window.
bool stencil_clear(const TransversalSplit& split, std::size_t k) {
  for (long o = -3; o <= 3; ++o) {
    const long i = static_cast<long>(k) + o * static_cast<long>(kStencilSpan);
    if (split.in_window(static_cast<std::size_t>(i))) return false;
  }
  return true;
}

}  // namespace

TransversalResidual transversal_residual(const TransversalSplit& split, const VectorXd& c) {
  const JacobiFamily& family = split.family();
  const int m = family.members();
  if (c.size() != m) throw PreconditionError("coefficient vector needs one entry per member");
  // J must lie outside 𝕍.
  const Mat& coeff = split.coefficients();
  VectorXd outside = c;
  if (coeff.cols() > 0) {
    const Mat q = orthonormal_basis(coeff);
    outside -= MatrixXd(q) * (MatrixXd(q).transpose() * c);
  }
  if (outside.norm() <= 1e-8 * c.norm())
    throw PreconditionError("the Jacobi field lies in the subspace");

  const std::size_t count = family.size();
  const double spacing = static_cast<double>(kStencilSpan) * family.path().step();
  const Vec cv = c;
  std::vector<Vec> coeffs(count), perp(count);
  double scale = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const Vec j = family.value(k) * cv;
    perp[k] = split.transversal_projector(k) * j;
    coeffs[k] = split.perp_frame(k).transpose() * j;
    scale = std::max(scale, perp[k].norm());
  }
  TransversalResidual out;
  out.sup_a = split.sup_a();
  out.curvature_min = out.tangential_min = out.oneill_min = std::numeric_limits<double>::infinity();
  out.curvature_max = out.tangential_max = out.oneill_max = -std::numeric_limits<double>::infinity();
  if (scale == 0.0) return out;
  for (std::size_t k = 0; k < count; ++k) {
    if (k < kTrim || k + kTrim >= count) {
      ++out.trimmed;
      continue;
    }
    if (!stencil_clear(split, k)) continue;
    const Vec ypp = stencil7_second(
        [&](long o) -> Vec {
          return coeffs[static_cast<std::size_t>(static_cast<long>(k) + o * static_cast<long>(kStencilSpan))];
        },
        spacing);
    const Mat proj = split.transversal_projector(k);
    const Mat& a = split.a_full(k);
    const Vec& y = perp[k];
    const Vec second = split.perp_frame(k) * ypp;
    const Vec tangential = proj * (family.bundle().curvature(k) * y);
    const Vec oneill = 3.0 * (a * (a.transpose() * y));
    out.residual = std::max(out.residual, (second + tangential + oneill).norm() / scale);
    out.control = std::max(out.control, (second + tangential).norm() / scale);
    ++out.checked;
    const double yy = y.squaredNorm();
    if (yy > 1e-12 * scale * scale) {
      const double tq = y.dot(tangential) / yy, oq = y.dot(oneill) / yy;
      out.tangential_min = std::min(out.tangential_min, tq);
      out.tangential_max = std::max(out.tangential_max, tq);
      out.oneill_min = std::min(out.oneill_min, oq);
      out.oneill_max = std::max(out.oneill_max, oq);
      out.curvature_min = std::min(out.curvature_min, tq + oq);
      out.curvature_max = std::max(out.curvature_max, tq + oq);
    }
  }
  return out;
}

ResidualReport transversal_report(const TransversalSplit& split, const VectorXd& c,
                                  double tolerance) {
  const TransversalResidual tr = transversal_residual(split, c);
  ResidualReport rep("transversal");
  rep.add("transversal.residual", tr.residual, tolerance, Bound::upper, split.windows(),
          "checked=" + std::to_string(tr.checked) + " trimmed=" + std::to_string(tr.trimmed));
  if (tr.sup_a >= 0.1)
    rep.add("transversal.control_without_oneill", tr.control, 1e-2, Bound::lower);
  else
    rep.note("control residual " + format_number(tr.control) + " not gated: sup|A| = " +
             format_number(tr.sup_a) + " < 0.1");
  rep.note("sup|A| = " + format_number(tr.sup_a));
  rep.note("modified curvature range [" + format_number(tr.curvature_min) + ", " +
           format_number(tr.curvature_max) + "]");
  return rep;
}

FirstOrderResidual first_order_residual(const TransversalSplit& split) {
  const JacobiFamily& family = split.family();
  const int m = family.members();
  const Mat& coeff = split.coefficients();
  const Mat others = orthonormal_complement(orthonormal_basis(coeff), m);
  const std::size_t count = family.size();
  const double spacing = static_cast<double>(kStencilSpan) * family.path().step();
  FirstOrderResidual out;

  for (int col = 0; col < others.cols(); ++col) {
    const Vec c = others.col(col);
    double scale = 0.0;
    for (std::size_t k = 0; k < count; ++k)
      scale = std::max({scale, (family.value(k) * c).norm(), (family.derivative(k) * c).norm()});
    if (scale == 0.0) continue;
    for (std::size_t k = 0; k < count; ++k) {
      if (split.in_window(k)) continue;
      const Vec j = family.value(k) * c, jp = family.derivative(k) * c;
      Vec jt = j, jtp = jp;
      if (coeff.cols() > 0) {
        // Subtract the 𝕍-member matching J(t) in T^v so that the remainder lies in T^⊥.
        const Mat vm = family.value(k) * coeff, vd = family.derivative(k) * coeff;
        const Vec w = vm.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(j);
        jt -= vm * w;
        jtp -= vd * w;
      }
      const Mat& v = split.vertical_basis(k);
      const Vec vert = v * (v.transpose() * jtp);
      const Vec rhs = split.a_full(k).transpose() * jt;
      out.derivative_identity = std::max(out.derivative_identity, (vert - rhs).norm() / scale);
    }
  }

  if (split.transversal_dim() > 0) {
    for (std::size_t k = kTrim; k + kTrim < count; ++k) {
      if (!stencil_clear(split, k)) continue;
      const Mat xp = stencil7_first(
          [&](long o) -> Mat {
            return split.perp_frame(
                static_cast<std::size_t>(static_cast<long>(k) + o * static_cast<long>(kStencilSpan)));
          },
          spacing);
      out.frame_identity = std::max(
          out.frame_identity, max_abs(xp + split.a_full(k).transpose() * split.perp_frame(k)));
      out.frame_normal = std::max(out.frame_normal, max_abs(split.transversal_projector(k) * xp));
    }
  }
  return out;
}

ResidualReport first_order_report(const TransversalSplit& split, double tolerance) {
  const FirstOrderResidual e = first_order_residual(split);
  ResidualReport rep("first-order identities");
  rep.add("first_order.vertical_derivative", e.derivative_identity, tolerance, Bound::upper, split.windows());
  rep.add("first_order.frame_derivative", e.frame_identity, tolerance, Bound::upper, split.windows());
  rep.add("first_order.frame_perp_parallel", e.frame_normal, tolerance, Bound::upper, split.windows());
  return rep;
}

OneillSpectrum oneill_spectrum(const TransversalSplit& split) {
  OneillSpectrum out;
  if (split.transversal_dim() == 0) return out;
  out.min = std::numeric_limits<double>::infinity();
  out.max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < split.size(); ++k) {
    const Mat& p = split.transversal_basis(k);
    const Mat& a = split.a_full(k);
    const Mat q = 3.0 * p.transpose() * a * a.transpose() * p;
    Eigen::SelfAdjointEigenSolver<Mat> eig(q, Eigen::EigenvaluesOnly);
    out.min = std::min(out.min, eig.eigenvalues()[0]);
    out.max = std::max(out.max, eig.eigenvalues()[q.rows() - 1]);
  }
  return out;
}

ResidualReport oneill_psd_check(const TransversalSplit& split, double tolerance) {
  const OneillSpectrum s = oneill_spectrum(split);
  ResidualReport rep("oneill term");
  rep.add("oneill.min_eigenvalue", s.min, -tolerance, Bound::lower);
  rep.note("largest eigenvalue of 3AA* = " + format_number(s.max));
  return rep;
}

}  // namespace tjf
