#include "tjf/manifold.hpp"

#include <cmath>
#include <sstream>

namespace tjf {

namespace {

double fd_step(const Vec& x) { return 1e-4 * (1.0 + x.norm()); }

std::string describe_point(const Vec& x) {
  std::ostringstream os;
  os << "(";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Connection and curvature formulas

namespace {

// Γ from the inverse metric and first derivatives.
Tensor3 levi_civita_from_inverse(const Mat& ginv, const Tensor3& dg) {
  const int n = static_cast<int>(ginv.rows());
  Tensor3 lower(n);  // Γ_{m,jk} at (m, j, k)
  for (int m = 0; m < n; ++m)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        lower(m, j, k) = 0.5 * (dg(j, m, k) + dg(k, m, j) - dg(m, j, k));
  Tensor3 gamma(n);
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int m = 0; m < n; ++m) s += ginv(l, m) * lower(m, j, k);
        gamma(l, j, k) = s;
      }
  return gamma;
}

Tensor4 curvature_from_inverse(const Mat& ginv, const Tensor3& dg, const Tensor4& d2g) {
  const int n = static_cast<int>(ginv.rows());
  const Tensor3 gamma = levi_civita_from_inverse(ginv, dg);

  Tensor3 lower(n);  // Γ_{m,jk} at (m, j, k)
  for (int m = 0; m < n; ++m)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        lower(m, j, k) = 0.5 * (dg(j, m, k) + dg(k, m, j) - dg(m, j, k));

  // ∂_i Γ^l_jk at (i, l, j, k).
  Tensor4 dgamma(n);
  Mat dgi(n, n);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) dgi(a, b) = dg(i, a, b);
    const Mat dginv = -ginv * dgi * ginv;
    for (int l = 0; l < n; ++l)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) {
            const double dlower =
                0.5 * (d2g(i, j, m, k) + d2g(i, k, m, j) - d2g(i, m, j, k));
            s += dginv(l, m) * lower(m, j, k) + ginv(l, m) * dlower;
          }
          dgamma(i, l, j, k) = s;
        }
  }

  Tensor4 r(n);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = dgamma(i, l, j, k) - dgamma(j, l, i, k);
          for (int m = 0; m < n; ++m)
            s += gamma(l, i, m) * gamma(m, j, k) - gamma(l, j, m) * gamma(m, i, k);
          r(l, i, j, k) = s;
        }
  return r;
}

// Inverse of an SPD metric; empty when g is not symmetric positive definite.
bool spd_inverse(const Mat& g, Mat& ginv) {
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + g.cwiseAbs().maxCoeff()))
    return false;
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) return false;
  ginv = llt.solve(Mat::Identity(g.rows(), g.cols()));
  return true;
}

}  // namespace

Tensor3 levi_civita(const Mat& g, const Tensor3& dg) {
  return levi_civita_from_inverse(g.inverse(), dg);
}

Tensor4 curvature_from_metric(const Mat& g, const Tensor3& dg, const Tensor4& d2g) {
  return curvature_from_inverse(g.inverse(), dg, d2g);
}

Tensor3 frame_connection(const Tensor3& c, const Mat& G) {
  const int n = c.dim();
  // bracket_inner(a, b, d) = <[e_a, e_b], e_d>
  Tensor3 bi(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d) {
        double s = 0.0;
        for (int m = 0; m < n; ++m) s += c(m, a, b) * G(m, d);
        bi(a, b, d) = s;
      }
  const Mat Ginv = G.inverse();
  Tensor3 gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec koszul(n);
      for (int l = 0; l < n; ++l)
        koszul[l] = 0.5 * (bi(i, j, l) - bi(j, l, i) + bi(l, i, j));
      const Vec comps = Ginv * koszul;
      for (int k = 0; k < n; ++k) gamma(k, i, j) = comps[k];
    }
  return gamma;
}

Tensor4 frame_curvature(const Tensor3& gamma, const Tensor3& c) {
  const int n = gamma.dim();
  Tensor4 r(n);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int m = 0; m < n; ++m)
            s += gamma(m, j, k) * gamma(l, i, m) - gamma(m, i, k) * gamma(l, j, m) -
                 c(m, i, j) * gamma(l, m, k);
          r(l, i, j, k) = s;
        }
  return r;
}

bool metric_is_spd(const Mat& g) {
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + g.cwiseAbs().maxCoeff()))
    return false;
  Eigen::LLT<Mat> llt(g);
  return llt.info() == Eigen::Success;
}

// ---------------------------------------------------------------------------
// ChartManifold

ChartManifold::ChartManifold(ChartSpec spec) : spec_(std::move(spec)) {
  if (spec_.dim <= 0 || spec_.dim > kMaxDim)
    throw PreconditionError("chart dimension out of range: " + std::to_string(spec_.dim));
  if (!spec_.metric) throw PreconditionError("chart '" + spec_.label + "' has no metric");
}

bool ChartManifold::in_domain(const Vec& p) const {
  if (p.size() != spec_.dim || !p.allFinite()) return false;
  return spec_.domain ? spec_.domain(p) : true;
}

Mat ChartManifold::metric(const Vec& p) const { return spec_.metric(p); }

Tensor3 ChartManifold::metric_d1(const Vec& p) const {
  return spec_.metric_d1 ? spec_.metric_d1(p) : metric_d1_fd(p);
}

Tensor4 ChartManifold::metric_d2(const Vec& p) const {
  return spec_.metric_d2 ? spec_.metric_d2(p) : metric_d2_fd(p);
}

Tensor3 ChartManifold::metric_d1_fd(const Vec& p) const {
  const int n = spec_.dim;
  const double h = fd_step(p);
  Tensor3 out(n);
  for (int k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e[k] = h;
    const Mat d = stencil_first<Mat>(spec_.metric(p - 2 * e), spec_.metric(p - e),
                                     spec_.metric(p + e), spec_.metric(p + 2 * e), h);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(k, i, j) = d(i, j);
  }
  return out;
}

Tensor4 ChartManifold::metric_d2_fd(const Vec& p) const {
  const int n = spec_.dim;
  const double h = fd_step(p);
  Tensor4 out(n);
  for (int l = 0; l < n; ++l) {
    Vec e = Vec::Zero(n);
    e[l] = h;
    const Tensor3 m2 = metric_d1(p - 2 * e), m1 = metric_d1(p - e);
    const Tensor3 p1 = metric_d1(p + e), p2 = metric_d1(p + 2 * e);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out(l, k, i, j) =
              stencil_first(m2(k, i, j), m1(k, i, j), p1(k, i, j), p2(k, i, j), h);
  }
  // Mixed partials commute; symmetrize away the stencil asymmetry.
  for (int l = 0; l < n; ++l)
    for (int k = l + 1; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double avg = 0.5 * (out(l, k, i, j) + out(k, l, i, j));
          out(l, k, i, j) = out(k, l, i, j) = avg;
        }
  return out;
}

Tensor3 ChartManifold::christoffel(const Vec& p) const {
  Mat ginv;
  if (!spd_inverse(spec_.metric(p), ginv))
    throw NumericalError("singular metric on '" + spec_.label + "' at " + describe_point(p));
  return levi_civita_from_inverse(ginv, metric_d1(p));
}

Tensor4 ChartManifold::curvature(const Vec& p) const {
  Mat ginv;
  if (!spd_inverse(spec_.metric(p), ginv))
    throw NumericalError("singular metric on '" + spec_.label + "' at " + describe_point(p));
  return curvature_from_inverse(ginv, metric_d1(p), metric_d2(p));
}

double ChartManifold::distance(const Vec& p, const Vec& q) const {
  return spec_.distance ? spec_.distance(p, q) : (p - q).norm();
}

Vec ChartManifold::sample_point(std::mt19937_64& rng) const {
  if (spec_.sampler) return spec_.sampler(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec x(spec_.dim);
  for (int i = 0; i < spec_.dim; ++i) x[i] = u(rng);
  return x;
}

// ---------------------------------------------------------------------------
// FrameManifold

FrameManifold::FrameManifold(int dim, Tensor3 structure, Mat frame_metric, std::string label,
                             GroupRealization realization)
    : dim_(dim),
      structure_(std::move(structure)),
      frame_metric_(std::move(frame_metric)),
      label_(std::move(label)),
      realization_(std::move(realization)) {
  if (dim_ <= 0 || dim_ > kMaxDim) throw PreconditionError("frame dimension out of range");
  if (structure_.dim() != dim_ || frame_metric_.rows() != dim_)
    throw PreconditionError("frame data dimension mismatch for '" + label_ + "'");
  if (!metric_is_spd(frame_metric_))
    throw PreconditionError("frame metric of '" + label_ + "' is not positive definite");
  const double scale = 1.0 + structure_.max_abs();
  for (int k = 0; k < dim_; ++k)
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        if (std::abs(structure_(k, i, j) + structure_(k, j, i)) > 1e-14 * scale)
          throw PreconditionError("structure constants of '" + label_ +
                                  "' are not antisymmetric");
  // Jacobi identity: cyclic sum of c_ij^m c_mk^l vanishes.
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k)
        for (int l = 0; l < dim_; ++l) {
          double s = 0.0;
          for (int m = 0; m < dim_; ++m)
            s += structure_(m, i, j) * structure_(l, m, k) +
                 structure_(m, j, k) * structure_(l, m, i) +
                 structure_(m, k, i) * structure_(l, m, j);
          if (std::abs(s) > 1e-12 * scale * scale)
            throw PreconditionError("structure constants of '" + label_ +
                                    "' violate the Jacobi identity");
        }
  gamma_ = frame_connection(structure_, frame_metric_);
  riemann_ = frame_curvature(gamma_, structure_);
}

bool FrameManifold::in_domain(const Vec& p) const {
  return p.size() == realization_.point_dim && p.allFinite();
}

Vec FrameManifold::point_velocity(const Vec& p, const Vec& v) const {
  return realization_.point_velocity(p, v);
}

Vec FrameManifold::move(const Vec& p, const Vec& v, double s) const {
  return realization_.move(p, v, s);
}

Vec FrameManifold::retract(const Vec& p) const {
  return realization_.retract ? realization_.retract(p) : p;
}

double FrameManifold::distance(const Vec& p, const Vec& q) const {
  return realization_.distance ? realization_.distance(p, q) : (p - q).norm();
}

Vec FrameManifold::sample_point(std::mt19937_64& rng) const { return realization_.sampler(rng); }

Vec FrameManifold::bracket(const Vec& u, const Vec& v) const {
  Vec out = Vec::Zero(dim_);
  for (int k = 0; k < dim_; ++k)
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) out[k] += structure_(k, i, j) * u[i] * v[j];
  return out;
}

// ---------------------------------------------------------------------------
// ProductManifold

ProductManifold::ProductManifold(ManifoldPtr first, ManifoldPtr second)
    : a_(std::move(first)), b_(std::move(second)) {
  if (!a_ || !b_) throw PreconditionError("product of a null manifold");
  if (a_->dim() + b_->dim() > kMaxDim || a_->point_dim() + b_->point_dim() > kMaxDim)
    throw PreconditionError("product dimension exceeds the supported maximum");
  label_ = "product(" + a_->label() + "," + b_->label() + ")";
}

Vec ProductManifold::point_block(const Vec& p, int factor) const {
  return factor == 0 ? Vec(p.head(a_->point_dim())) : Vec(p.tail(b_->point_dim()));
}

Vec ProductManifold::tangent_block(const Vec& v, int factor) const {
  return factor == 0 ? Vec(v.head(a_->dim())) : Vec(v.tail(b_->dim()));
}

Vec ProductManifold::join_points(const Vec& p, const Vec& q) const {
  Vec out(p.size() + q.size());
  out << p, q;
  return out;
}

Vec ProductManifold::join_tangents(const Vec& u, const Vec& v) const { return join_points(u, v); }

bool ProductManifold::in_domain(const Vec& p) const {
  if (p.size() != point_dim()) return false;
  return a_->in_domain(point_block(p, 0)) && b_->in_domain(point_block(p, 1));
}

Mat ProductManifold::metric(const Vec& p) const {
  const int na = a_->dim(), n = dim();
  Mat g = Mat::Zero(n, n);
  g.topLeftCorner(na, na) = a_->metric(point_block(p, 0));
  g.bottomRightCorner(n - na, n - na) = b_->metric(point_block(p, 1));
  return g;
}

Tensor3 ProductManifold::christoffel(const Vec& p) const {
  const int na = a_->dim(), nb = b_->dim();
  const Tensor3 ga = a_->christoffel(point_block(p, 0));
  const Tensor3 gb = b_->christoffel(point_block(p, 1));
  Tensor3 out(na + nb);
  for (int k = 0; k < na; ++k)
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < na; ++j) out(k, i, j) = ga(k, i, j);
  for (int k = 0; k < nb; ++k)
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j) out(na + k, na + i, na + j) = gb(k, i, j);
  return out;
}

Tensor4 ProductManifold::curvature(const Vec& p) const {
  const int na = a_->dim(), nb = b_->dim();
  const Tensor4 ra = a_->curvature(point_block(p, 0));
  const Tensor4 rb = b_->curvature(point_block(p, 1));
  Tensor4 out(na + nb);
  for (int l = 0; l < na; ++l)
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < na; ++j)
        for (int k = 0; k < na; ++k) out(l, i, j, k) = ra(l, i, j, k);
  for (int l = 0; l < nb; ++l)
    for (int i = 0; i < nb; ++i)
      for (int j = 0; j < nb; ++j)
        for (int k = 0; k < nb; ++k) out(na + l, na + i, na + j, na + k) = rb(l, i, j, k);
  return out;
}

Vec ProductManifold::point_velocity(const Vec& p, const Vec& v) const {
  return join_points(a_->point_velocity(point_block(p, 0), tangent_block(v, 0)),
                     b_->point_velocity(point_block(p, 1), tangent_block(v, 1)));
}

Vec ProductManifold::move(const Vec& p, const Vec& v, double s) const {
  return join_points(a_->move(point_block(p, 0), tangent_block(v, 0), s),
                     b_->move(point_block(p, 1), tangent_block(v, 1), s));
}

Vec ProductManifold::retract(const Vec& p) const {
  return join_points(a_->retract(point_block(p, 0)), b_->retract(point_block(p, 1)));
}

double ProductManifold::distance(const Vec& p, const Vec& q) const {
  return std::hypot(a_->distance(point_block(p, 0), point_block(q, 0)),
                    b_->distance(point_block(p, 1), point_block(q, 1)));
}

Vec ProductManifold::sample_point(std::mt19937_64& rng) const {
  const Vec pa = a_->sample_point(rng);
  const Vec pb = b_->sample_point(rng);
  return join_points(pa, pb);
}

bool ProductManifold::nonnegatively_curved() const {
  return a_->nonnegatively_curved() && b_->nonnegatively_curved();
}

// ---------------------------------------------------------------------------
// Helpers

namespace {
void require_domain(const Manifold& m, const Vec& x) {
  if (!m.in_domain(x))
    throw DomainError("point " + describe_point(x) + " outside the domain of '" + m.label() + "'");
}
}  // namespace

Mat metric_at(const Manifold& m, const Vec& x) {
  require_domain(m, x);
  return m.metric(x);
}

Tensor3 christoffel(const Manifold& m, const Vec& x) {
  require_domain(m, x);
  return m.christoffel(x);
}

Vec riemann(const Manifold& m, const Vec& x, const Vec& u, const Vec& v, const Vec& w) {
  require_domain(m, x);
  return contract(m.curvature(x), u, v, w);
}

double inner(const Mat& g, const Vec& u, const Vec& v) { return u.dot(g * v); }

double norm(const Mat& g, const Vec& u) { return std::sqrt(std::max(0.0, inner(g, u, u))); }

double sectional(const Manifold& m, const Vec& x, const Vec& u, const Vec& v) {
  require_domain(m, x);
  const Mat g = m.metric(x);
  const double uu = inner(g, u, u), vv = inner(g, v, v), uv = inner(g, u, v);
  const double gram = uu * vv - uv * uv;
  if (!(gram > 1e-12 * uu * vv) || uu <= 0.0 || vv <= 0.0)
    throw PreconditionError("degenerate plane for sectional curvature");
  const Vec r = contract(m.curvature(x), u, v, v);
  return inner(g, r, u) / gram;
}

}  // namespace tjf
