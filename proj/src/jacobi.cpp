#include "tjf/jacobi.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <ostream>

namespace tjf {

namespace {

// Gram-Schmidt completion of the unit vector v to a g-orthonormal basis;
// returns the n-1 vectors orthogonal to v.
Mat orthonormal_normal_frame(const Mat& g, const Vec& v) {
  const int n = static_cast<int>(v.size());
  Mat basis(n, n);
  basis.col(0) = v;
  int filled = 1;
  for (int i = 0; i < n && filled < n; ++i) {
    Vec w = Vec::Unit(n, i);
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < filled; ++j) w -= inner(g, basis.col(j), w) * basis.col(j);
    const double len = norm(g, w);
    if (len < 1e-6) continue;
    basis.col(filled++) = w / len;
  }
  if (filled < n) throw NumericalError("could not complete an orthonormal frame of the normal space");
  return basis.rightCols(n - 1);
}

Mat curvature_matrix(const Manifold& m, const Vec& x, const Vec& v, const Mat& frame) {
  const Tensor4 r = m.curvature(x);
  const Mat g = m.metric(x);
  Mat rv(frame.rows(), frame.cols());
  for (int a = 0; a < frame.cols(); ++a) rv.col(a) = contract(r, Vec(frame.col(a)), v, v);
  Mat k = frame.transpose() * g * rv;
  return 0.5 * (k + k.transpose());
}

std::pair<std::size_t, double> locate_sample(const GeodesicPath& path, double t) {
  const double tol = 1e-12 * (1.0 + std::abs(path.t_begin()) + std::abs(path.t_end()));
  if (t < path.t_begin() - tol || t > path.t_end() + tol)
    throw PreconditionError("parameter " + std::to_string(t) + " outside path interval");
  const double u = (t - path.t_begin()) / path.step();
  auto k = static_cast<std::size_t>(std::max(0.0, std::floor(u)));
  if (k >= path.size() - 1) k = path.size() - 2;
  return {k, std::clamp((t - path.time(k)) / path.step(), 0.0, 1.0)};
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

// ---------------------------------------------------------------------------
// NormalBundle

NormalBundle::NormalBundle(PathPtr path) : path_(std::move(path)) {
  const Manifold& m = path_->manifold();
  const int n = m.dim();
  if (n < 2) throw PreconditionError("normal bundle needs dimension at least 2");
  rank_ = n - 1;
  const std::size_t b = path_->base_index();
  const Mat e0 = orthonormal_normal_frame(m.metric(path_->point(b)), path_->velocity(b));
  frame_ = parallel_transport(path_, e0);
  const std::size_t count = path_->size();
  k_.resize(count);
  k_mid_.resize(count - 1);
  for (std::size_t k = 0; k < count; ++k)
    k_[k] = curvature_matrix(m, path_->point(k), path_->velocity(k), frame_->at(k));
  for (std::size_t k = 0; k + 1 < count; ++k) {
    const double tm = 0.5 * (path_->time(k) + path_->time(k + 1));
    const auto [x, v] = path_->evaluate(tm);
    k_mid_[k] = curvature_matrix(m, x, v, frame_->evaluate(tm));
  }
}

Vec NormalBundle::coordinates(std::size_t k, const Vec& w) const {
  return frame(k).transpose() * path_->manifold().metric(path_->point(k)) * w;
}

double NormalBundle::frame_defect() const {
  const Manifold& m = path_->manifold();
  double worst = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    const Mat g = m.metric(path_->point(k));
    const Mat& e = frame(k);
    const Mat gram = e.transpose() * g * e;
    worst = std::max(worst, max_abs(gram - Mat::Identity(rank_, rank_)));
    worst = std::max(worst, max_abs(e.transpose() * g * path_->velocity(k)));
  }
  return worst;
}

BundlePtr make_bundle(PathPtr path) { return std::make_shared<NormalBundle>(std::move(path)); }

// ---------------------------------------------------------------------------
// JacobiFamily

JacobiFamily::JacobiFamily(BundlePtr bundle, Mat values0, Mat derivatives0)
    : bundle_(std::move(bundle)), y0_(std::move(values0)), yp0_(std::move(derivatives0)) {
  const int r = bundle_->rank();
  if (y0_.rows() != r || yp0_.rows() != r || y0_.cols() != yp0_.cols())
    throw PreconditionError("Jacobi initial data has the wrong shape");
  const GeodesicPath& path = bundle_->path();
  const std::size_t count = path.size(), base = path.base_index();
  y_.resize(count);
  yp_.resize(count);
  y_[base] = y0_;
  yp_[base] = yp0_;

  // Y'' = -K Y as a first-order system, classical RK4 with K from the bundle
  // at the nodes and midpoints.
  auto step = [&](std::size_t from, std::size_t to) {
    const double dt = path.time(to) - path.time(from);
    const Mat& k0 = bundle_->curvature(from);
    const Mat& km = bundle_->curvature_mid(std::min(from, to));
    const Mat& k1 = bundle_->curvature(to);
    const Mat& y = y_[from];
    const Mat& p = yp_[from];
    const Mat ay1 = p, ap1 = -k0 * y;
    const Mat ay2 = p + 0.5 * dt * ap1, ap2 = -km * (y + 0.5 * dt * ay1);
    const Mat ay3 = p + 0.5 * dt * ap2, ap3 = -km * (y + 0.5 * dt * ay2);
    const Mat ay4 = p + dt * ap3, ap4 = -k1 * (y + dt * ay3);
    y_[to] = y + dt / 6.0 * (ay1 + 2 * ay2 + 2 * ay3 + ay4);
    yp_[to] = p + dt / 6.0 * (ap1 + 2 * ap2 + 2 * ap3 + ap4);
  };
  for (std::size_t k = base; k + 1 < count; ++k) step(k, k + 1);
  for (std::size_t k = base; k > 0; --k) step(k, k - 1);

  omega_ = yp0_.transpose() * y0_ - y0_.transpose() * yp0_;
  const int m = members();
  if (m > 0) {
    std::vector<double> norms(static_cast<std::size_t>(m));
    for (int a = 0; a < m; ++a)
      norms[static_cast<std::size_t>(a)] =
          std::sqrt(y0_.col(a).squaredNorm() + yp0_.col(a).squaredNorm());
    std::sort(norms.begin(), norms.end(), std::greater<>());
    omega_scale_ = norms[0] * (m > 1 ? norms[1] : norms[0]);
  }
  self_adjoint_ = max_abs(omega_) <= kSelfAdjointTol * omega_scale_;
}

std::pair<Mat, Mat> JacobiFamily::evaluate(double t) const {
  const GeodesicPath& path = bundle_->path();
  const auto [k, s] = locate_sample(path, t);
  if (s == 0.0) return {y_[k], yp_[k]};
  if (s == 1.0) return {y_[k + 1], yp_[k + 1]};
  const double h = path.step();
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
  const double h0 = 1 - 10 * s3 + 15 * s4 - 6 * s5;
  const double h1 = s - 6 * s3 + 8 * s4 - 3 * s5;
  const double h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
  const double h3 = 0.5 * s3 - s4 + 0.5 * s5;
  const double h4 = -4 * s3 + 7 * s4 - 3 * s5;
  const double h5 = 10 * s3 - 15 * s4 + 6 * s5;
  const double d0 = -30 * s2 + 60 * s3 - 30 * s4;
  const double d1 = 1 - 18 * s2 + 32 * s3 - 15 * s4;
  const double d2 = s - 4.5 * s2 + 6 * s3 - 2.5 * s4;
  const double d3 = 1.5 * s2 - 4 * s3 + 2.5 * s4;
  const double d4 = -12 * s2 + 28 * s3 - 15 * s4;
  const double d5 = 30 * s2 - 60 * s3 + 30 * s4;
  const Mat& ya = y_[k];
  const Mat& yb = y_[k + 1];
  const Mat& pa = yp_[k];
  const Mat& pb = yp_[k + 1];
  const Mat aa = -bundle_->curvature(k) * ya;
  const Mat ab = -bundle_->curvature(k + 1) * yb;
  Mat y = h0 * ya + h1 * h * pa + h2 * h * h * aa + h3 * h * h * ab + h4 * h * pb + h5 * yb;
  Mat yp = (d0 * ya + d1 * h * pa + d2 * h * h * aa + d3 * h * h * ab + d4 * h * pb + d5 * yb) / h;
  return {std::move(y), std::move(yp)};
}

Mat JacobiFamily::omega_at(std::size_t k) const {
  return yp_[k].transpose() * y_[k] - y_[k].transpose() * yp_[k];
}

double JacobiFamily::omega_drift() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < size(); ++k) worst = std::max(worst, max_abs(omega_at(k) - omega_));
  return worst;
}

double JacobiFamily::ode_residual() const {
  const std::size_t span = 10, count = size();
  if (count <= 4 * span) return 0.0;
  const double spacing = static_cast<double>(span) * path().step();
  double worst = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < count; ++k) scale = std::max(scale, max_abs(y_[k]));
  for (std::size_t k = 2 * span; k + 2 * span < count; k += span) {
    const Mat ypp = stencil_second(y_[k - 2 * span], y_[k - span], y_[k], y_[k + span],
                                   y_[k + 2 * span], spacing);
    worst = std::max(worst, max_abs(ypp + bundle_->curvature(k) * y_[k]));
  }
  return scale > 0 ? worst / scale : worst;
}

void JacobiFamily::write_csv(std::ostream& os) const {
  const int r = rank(), m = members();
  os << "t";
  for (int a = 1; a <= m; ++a) {
    for (int i = 1; i <= r; ++i) os << ",y" << a << "_" << i;
    for (int i = 1; i <= r; ++i) os << ",dy" << a << "_" << i;
  }
  os << "\n";
  char buf[40];
  for (std::size_t k = 0; k < size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", path().time(k));
    os << buf;
    for (int a = 0; a < m; ++a) {
      for (int i = 0; i < r; ++i) {
        std::snprintf(buf, sizeof(buf), ",%.17g", y_[k](i, a));
        os << buf;
      }
      for (int i = 0; i < r; ++i) {
        std::snprintf(buf, sizeof(buf), ",%.17g", yp_[k](i, a));
        os << buf;
      }
    }
    os << "\n";
  }
}

Vec JacobiField::tangent_value(std::size_t k) const {
  return family_->bundle().tangent(k, value(k));
}

Vec JacobiField::tangent_derivative(std::size_t k) const {
  return family_->bundle().tangent(k, derivative(k));
}

// ---------------------------------------------------------------------------
// Construction

namespace {

void require_normal(const NormalBundle& bundle, const Vec& w, const char* what) {
  const GeodesicPath& path = bundle.path();
  const std::size_t b = path.base_index();
  const Mat g = path.manifold().metric(path.point(b));
  if (w.size() != path.manifold().dim())
    throw PreconditionError(std::string(what) + " has the wrong number of components");
  const double c = std::abs(inner(g, w, path.velocity(b)));
  if (c > kNormalityTol * std::max(1.0, norm(g, w)))
    throw PreconditionError(std::string(what) + " is not normal to the geodesic (<w, c'> = " +
                            std::to_string(c) + ")");
}

void require_rank(const Mat& values0, const Mat& derivatives0) {
  MatrixXd stacked(values0.rows() * 2, values0.cols());
  stacked << values0, derivatives0;
  Eigen::JacobiSVD<MatrixXd> svd(stacked);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[s.size() - 1] < kRankTol * s[0])
    throw PreconditionError("Jacobi initial data is rank deficient (smallest singular value " +
                            std::to_string(s.size() ? s[s.size() - 1] : 0.0) + ")");
}

}  // namespace

JacobiField integrate_jacobi(const BundlePtr& bundle, const Vec& j0, const Vec& j0p) {
  require_normal(*bundle, j0, "J(0)");
  require_normal(*bundle, j0p, "J'(0)");
  const std::size_t b = bundle->path().base_index();
  Mat y0 = bundle->coordinates(b, j0);
  Mat yp0 = bundle->coordinates(b, j0p);
  return JacobiField(std::make_shared<JacobiFamily>(bundle, std::move(y0), std::move(yp0)));
}

JacobiField integrate_jacobi(const PathPtr& path, const Vec& j0, const Vec& j0p) {
  return integrate_jacobi(make_bundle(path), j0, j0p);
}

FamilyPtr make_family_frame(const BundlePtr& bundle, const Mat& values0, const Mat& derivatives0) {
  if (values0.cols() != bundle->rank())
    throw PreconditionError("a normal Jacobi family needs exactly n-1 = " +
                            std::to_string(bundle->rank()) + " members, got " +
                            std::to_string(values0.cols()));
  require_rank(values0, derivatives0);
  return std::make_shared<JacobiFamily>(bundle, values0, derivatives0);
}

FamilyPtr make_family(const BundlePtr& bundle, const std::vector<JacobiInit>& inits) {
  const int r = bundle->rank();
  if (static_cast<int>(inits.size()) != r)
    throw PreconditionError("a normal Jacobi family needs exactly n-1 = " + std::to_string(r) +
                            " members, got " + std::to_string(inits.size()));
  const std::size_t b = bundle->path().base_index();
  Mat y0(r, r), yp0(r, r);
  for (int a = 0; a < r; ++a) {
    const auto& init = inits[static_cast<std::size_t>(a)];
    require_normal(*bundle, init.value, "J(0)");
    require_normal(*bundle, init.derivative, "J'(0)");
    y0.col(a) = bundle->coordinates(b, init.value);
    yp0.col(a) = bundle->coordinates(b, init.derivative);
  }
  return make_family_frame(bundle, y0, yp0);
}

FamilyPtr make_family(const PathPtr& path, const std::vector<JacobiInit>& inits) {
  return make_family(make_bundle(path), inits);
}

// ---------------------------------------------------------------------------
// Riccati operator

namespace {

RiccatiOperator riccati_from(const JacobiFamily& family, double t, const Mat& y, const Mat& yp) {
  if (family.members() != family.rank())
    throw PreconditionError("the Riccati operator needs a family of n-1 members");
  if (!family.self_adjoint())
    throw PreconditionError("the Riccati operator is only defined here for self-adjoint families");
  RiccatiOperator out;
  out.t = t;
  const SingularRange sv = singular_range(y);
  if (!(sv.min >= kRiccatiSingularTol * sv.max) || sv.max == 0.0) return out;
  out.singular = false;
  // L Y = Y'  <=>  Yᵀ Lᵀ = Y'ᵀ.
  out.matrix = y.transpose().partialPivLu().solve(yp.transpose()).transpose();
  return out;
}

}  // namespace

RiccatiOperator riccati_at(const JacobiFamily& family, double t) {
  const auto [y, yp] = family.evaluate(t);
  return riccati_from(family, t, y, yp);
}

RiccatiOperator riccati_at_sample(const JacobiFamily& family, std::size_t k) {
  return riccati_from(family, family.path().time(k), family.value(k), family.derivative(k));
}

// ---------------------------------------------------------------------------
// Zeros

std::vector<ZeroEvent> find_zeros(const JacobiFamily& family, const Mat& combinations,
                                  double rel_threshold) {
  std::vector<ZeroEvent> out;
  const int q = static_cast<int>(combinations.cols());
  if (q == 0) return out;
  const std::size_t count = family.size();
  const GeodesicPath& path = family.path();

  // Grid profile of the smallest singular value via the q × q Gram matrix; its
  // precision floor (~1e-8 relative) is far below the prefilter below.
  std::vector<double> smin(count);
  double scale = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const Mat v = family.value(k) * combinations;
    if (q == 1) {
      smin[k] = v.norm();
      scale = std::max(scale, smin[k]);
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Mat> eig(v.transpose() * v, Eigen::EigenvaluesOnly);
    smin[k] = std::sqrt(std::max(0.0, eig.eigenvalues()[0]));
    scale = std::max(scale, std::sqrt(std::max(0.0, eig.eigenvalues()[q - 1])));
  }
  if (scale == 0.0) return out;
  const double threshold = rel_threshold * scale;
  // Grid values at a simple zero are at most about half a step times |J'|.
  const double prefilter = 0.05 * scale;

  auto sigma_at = [&](double t) {
    const Mat v = family.evaluate(t).first * combinations;
    Eigen::JacobiSVD<Mat> svd(v);
    const auto& s = svd.singularValues();
    return q > v.rows() ? 0.0 : s[s.size() - 1];
  };

  for (std::size_t k = 0; k < count; ++k) {
    const bool left = k == 0 || smin[k] <= smin[k - 1];
    const bool right = k + 1 == count || smin[k] < smin[k + 1];
    if (!(left && right) || smin[k] > prefilter) continue;
    const double a = path.time(k == 0 ? 0 : k - 1);
    const double b = path.time(std::min(k + 1, count - 1));
    std::uintmax_t iters = 200;
    const auto [t_star, f_star] = boost::math::tools::brent_find_minima(
        [&](double t) {
          const double s = sigma_at(t);
          return s * s;
        },
        a, b, std::numeric_limits<double>::digits / 2, iters);
    double t_best = t_star, s_best = std::sqrt(std::max(0.0, f_star));
    if (smin[k] <= s_best) {  // the node itself may be the better estimate
      t_best = path.time(k);
      s_best = smin[k];
    }
    if (s_best > threshold) continue;
    if (!out.empty() && std::abs(out.back().t - t_best) < path.step()) continue;
    ZeroEvent ev;
    ev.t = t_best;
    ev.index = path.nearest_index(t_best);
    const Mat v = family.evaluate(t_best).first * combinations;
    Eigen::JacobiSVD<Mat> svd(v, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int nonzero = 0;
    while (nonzero < sv.size() && sv[nonzero] > threshold) ++nonzero;
    // Wide value matrices carry extra null directions; always keep at least the smallest.
    nonzero = std::min(nonzero, q - 1);
    ev.null_directions = svd.matrixV().rightCols(q - nonzero);
    out.push_back(std::move(ev));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Families from foliations and Killing fields

FamilyPtr family_from_foliation(const PathPtr& path, const FoliationSpec& fol) {
  const Manifold& m = path->manifold();
  if (fol.manifold.get() != &m && fol.manifold->label() != m.label())
    throw PreconditionError("foliation '" + fol.label + "' lives on a different manifold");
  auto bundle = make_bundle(path);
  const std::size_t b = path->base_index();
  const Vec& x0 = path->point(b);
  const Vec& v0 = path->velocity(b);
  const Mat g0 = m.metric(x0);
  const LeafTangent lt = leaf_tangent(fol, x0);
  const int k = lt.rank, r = bundle->rank();
  for (int a = 0; a < k; ++a) {
    const double c = std::abs(inner(g0, lt.basis.col(a), v0));
    if (c > 1e-8)
      throw PreconditionError("initial velocity is not perpendicular to the leaf of '" +
                              fol.label + "' (<c', T> = " + std::to_string(c) + ")");
  }

  // Leaf-tangent extensions W_a = Σ α_i X_i with W_a(x0) = T_a.
  MatrixXd gens(m.dim(), static_cast<Eigen::Index>(fol.generators.size()));
  for (std::size_t i = 0; i < fol.generators.size(); ++i)
    gens.col(static_cast<Eigen::Index>(i)) = fol.generators[i](x0);
  Mat shape = Mat::Zero(k, k);
  if (k > 0) {
    const Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(gens);
    std::vector<VectorField> ext;
    for (int a = 0; a < k; ++a) {
      const VectorXd alpha = cod.solve(VectorXd(lt.basis.col(a)));
      ext.push_back([&fol, alpha](const Vec& x) {
        Vec w = Vec::Zero(fol.manifold->dim());
        for (std::size_t i = 0; i < fol.generators.size(); ++i)
          w += alpha[static_cast<Eigen::Index>(i)] * fol.generators[i](x);
        return w;
      });
    }
    // <S u, w> = -<ċ, ∇_u W>.
    for (int a = 0; a < k; ++a)
      for (int c = 0; c < k; ++c)
        shape(a, c) = -inner(g0, v0, covariant_derivative(m, ext[static_cast<std::size_t>(c)], x0,
                                                          lt.basis.col(a)));
    const double asym = max_abs(shape - shape.transpose());
    if (asym > 1e-5 * (1.0 + max_abs(shape)))
      throw NumericalError("shape operator estimate of '" + fol.label +
                           "' is not symmetric (defect " + std::to_string(asym) + ")");
    shape = 0.5 * (shape + shape.transpose());
  }

  const Mat tangent = bundle->frame(b).transpose() * g0 * lt.basis;  // r × k
  const Mat normal = orthonormal_complement(orthonormal_basis(tangent), r);
  Mat y0 = Mat::Zero(r, r), yp0 = Mat::Zero(r, r);
  if (k > 0) {
    y0.leftCols(k) = tangent;
    yp0.leftCols(k) = tangent * shape;  // shape is symmetric
  }
  if (normal.cols() != r - k)
    throw NumericalError("leaf tangent and normal space dimensions do not add up");
  yp0.rightCols(r - k) = normal;
  auto family = make_family_frame(bundle, y0, yp0);
  if (!family->self_adjoint())
    throw NumericalError("family from foliation '" + fol.label + "' is not self-adjoint");
  return family;
}

double killing_defect(const GeodesicPath& path, const VectorField& field) {
  const Manifold& m = path.manifold();
  const int n = m.dim();
  const std::size_t stride = std::max<std::size_t>(1, path.size() / 50);
  double worst = 0.0;
  for (std::size_t k = 0; k < path.size(); k += stride) {
    const Vec& x = path.point(k);
    const Mat g = m.metric(x);
    Mat d(n, n);
    for (int a = 0; a < n; ++a) d.col(a) = covariant_derivative(m, field, x, Vec::Unit(n, a));
    const Mat s = g * d;
    const double scale = std::max(1.0, norm(g, field(x)));
    worst = std::max(worst, max_abs(s + s.transpose()) / scale);
  }
  return worst;
}

FamilyPtr family_from_killing(const PathPtr& path, const std::vector<VectorField>& fields) {
  const Manifold& m = path->manifold();
  auto bundle = make_bundle(path);
  const int r = bundle->rank();
  const std::size_t b = path->base_index();
  const Vec& x0 = path->point(b);
  const Vec& v0 = path->velocity(b);
  const Mat g0 = m.metric(x0);

  std::vector<Vec> cand_y, cand_yp;
  Mat values(r, static_cast<int>(fields.size()));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const double defect = killing_defect(*path, fields[i]);
    if (defect > 1e-6)
      throw PreconditionError("field " + std::to_string(i) + " is not a Killing field (defect " +
                              std::to_string(defect) + ")");
    const Vec x = fields[i](x0);
    const Vec j0 = x - inner(g0, x, v0) * v0;
    const Vec j0p = covariant_derivative(m, fields[i], x0, v0);
    cand_y.push_back(bundle->coordinates(b, j0));
    cand_yp.push_back(bundle->coordinates(b, j0p));
    values.col(static_cast<int>(i)) = cand_y.back();
  }
  const Mat comp = orthonormal_complement(orthonormal_basis(values, 1e-8, 1e-9), r);
  for (int c = 0; c < comp.cols(); ++c) {
    cand_y.push_back(Vec::Zero(r));
    cand_yp.push_back(comp.col(c));
  }

  // Greedy selection keeps the Killing restrictions first.
  MatrixXd chosen(2 * r, 0);
  Mat y0(r, r), yp0(r, r);
  int filled = 0;
  for (std::size_t i = 0; i < cand_y.size() && filled < r; ++i) {
    VectorXd c(2 * r);
    c << cand_y[i], cand_yp[i];
    const double len = c.norm();
    if (len == 0.0) continue;
    VectorXd resid = c;
    if (chosen.cols() > 0) resid -= chosen * (chosen.transpose() * c);
    if (resid.norm() <= 1e-8 * len) continue;
    chosen.conservativeResize(Eigen::NoChange, chosen.cols() + 1);
    chosen.col(chosen.cols() - 1) = resid.normalized();
    y0.col(filled) = cand_y[i];
    yp0.col(filled) = cand_yp[i];
    ++filled;
  }
  if (filled != r)
    throw NumericalError("Killing fields and their completion span only " +
                         std::to_string(filled) + " of " + std::to_string(r) + " dimensions");
  auto family = make_family_frame(bundle, y0, yp0);
  if (!family->self_adjoint()) {
    Eigen::Index i = 0, j = 0;
    const double worst = family->omega().cwiseAbs().maxCoeff(&i, &j);
    throw NumericalError("Killing family is not self-adjoint: |Omega(" + std::to_string(i + 1) +
                         "," + std::to_string(j + 1) + ")| = " + format_number(worst));
  }
  return family;
}

}  // namespace tjf
