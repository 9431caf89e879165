#include "tjf/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace tjf {

namespace {

struct HermiteWeights {
  double p0, m0, p1, m1;
};

HermiteWeights hermite_value(double s) {
  const double s2 = s * s, s3 = s2 * s;
  return {2 * s3 - 3 * s2 + 1, s3 - 2 * s2 + s, -2 * s3 + 3 * s2, s3 - s2};
}

HermiteWeights hermite_slope(double s) {
  const double s2 = s * s;
  return {6 * s2 - 6 * s, 3 * s2 - 4 * s + 1, -6 * s2 + 6 * s, 3 * s2 - 2 * s};
}

struct State {
  Vec x, v;
};

State rhs(const Manifold& m, const State& s) {
  return {m.point_velocity(s.x, s.v), -contract(m.christoffel(s.x), s.v, s.v)};
}

State rk4(const Manifold& m, const State& s, double h) {
  const State k1 = rhs(m, s);
  const State k2 = rhs(m, {s.x + 0.5 * h * k1.x, s.v + 0.5 * h * k1.v});
  const State k3 = rhs(m, {s.x + 0.5 * h * k2.x, s.v + 0.5 * h * k2.v});
  const State k4 = rhs(m, {s.x + h * k3.x, s.v + h * k3.v});
  State out{s.x + h / 6.0 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
            s.v + h / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v)};
  out.x = m.retract(out.x);
  return out;
}

// Locates the Hermite interval for t on a uniform grid.
std::pair<std::size_t, double> locate(const GeodesicPath& path, double t) {
  const double tol = 1e-12 * (1.0 + std::abs(path.t_begin()) + std::abs(path.t_end()));
  if (t < path.t_begin() - tol || t > path.t_end() + tol)
    throw PreconditionError("parameter " + std::to_string(t) + " outside path interval [" +
                            std::to_string(path.t_begin()) + ", " +
                            std::to_string(path.t_end()) + "]");
  const double u = (t - path.t_begin()) / path.step();
  auto k = static_cast<std::size_t>(std::max(0.0, std::floor(u)));
  if (k >= path.size() - 1) k = path.size() - 2;
  return {k, std::clamp((t - path.time(k)) / path.step(), 0.0, 1.0)};
}

}  // namespace

PathPtr integrate_geodesic(ManifoldPtr m, const Vec& x0, const Vec& v0, double t_begin,
                           double t_end, const GeodesicOptions& opts) {
  if (!m) throw PreconditionError("integrate_geodesic: null manifold");
  if (!(opts.step > 0.0)) throw PreconditionError("integrate_geodesic: step must be positive");
  if (!(t_begin <= 0.0 && t_end >= 0.0 && t_end > t_begin))
    throw PreconditionError("integrate_geodesic: interval must contain 0 and be nonempty");
  if (!m->in_domain(x0)) throw DomainError("integrate_geodesic: start point outside domain", 0.0);
  if (v0.size() != m->dim()) throw PreconditionError("integrate_geodesic: velocity size mismatch");
  const Mat g0 = m->metric(x0);
  const double speed = norm(g0, v0);
  if (std::abs(speed - 1.0) > 1e-10)
    throw PreconditionError("integrate_geodesic: initial velocity is not unit (|v0|_g = " +
                            std::to_string(speed) + ")");

  const double h = opts.step;
  const auto forward = static_cast<std::size_t>(std::ceil(t_end / h - 1e-9));
  const auto backward = static_cast<std::size_t>(std::ceil(-t_begin / h - 1e-9));

  auto path = std::shared_ptr<GeodesicPath>(new GeodesicPath());
  path->manifold_ = m;
  path->step_ = h;

  auto sweep = [&](std::size_t count, double dir, std::vector<State>& out) {
    State s{x0, v0};
    for (std::size_t k = 0; k < count; ++k) {
      State next = rk4(*m, s, dir * h);
      if (!m->in_domain(next.x)) {
        const double exit_t = dir * h * static_cast<double>(k + 1);
        if (!opts.truncate_at_exit)
          throw DomainError("geodesic left the domain of '" + m->label() + "' at t = " +
                                std::to_string(exit_t),
                            exit_t);
        path->truncated_ = true;
        path->exit_parameter_ = exit_t;
        return;
      }
      out.push_back(next);
      s = next;
    }
  };
  std::vector<State> fwd, bwd;
  sweep(backward, -1.0, bwd);
  sweep(forward, 1.0, fwd);
  if (fwd.empty() && bwd.empty())
    throw DomainError("geodesic leaves the domain of '" + m->label() + "' immediately", 0.0);

  const std::size_t total = bwd.size() + 1 + fwd.size();
  path->base_ = bwd.size();
  path->t_.reserve(total);
  auto push = [&](const State& s, double t) {
    path->t_.push_back(t);
    path->x_.push_back(s.x);
    path->v_.push_back(s.v);
    const State d = rhs(*m, s);
    path->xdot_.push_back(d.x);
    path->vdot_.push_back(d.v);
  };
  for (std::size_t i = bwd.size(); i-- > 0;) push(bwd[i], -h * static_cast<double>(i + 1));
  push({x0, v0}, 0.0);
  for (std::size_t i = 0; i < fwd.size(); ++i) push(fwd[i], h * static_cast<double>(i + 1));
  return path;
}

std::size_t GeodesicPath::nearest_index(double t) const {
  const double u = std::round((t - t_.front()) / step_);
  if (u <= 0) return 0;
  return std::min(static_cast<std::size_t>(u), t_.size() - 1);
}

std::pair<Vec, Vec> GeodesicPath::evaluate(double t) const {
  const auto [k, s] = locate(*this, t);
  if (s == 0.0) return {x_[k], v_[k]};
  if (s == 1.0) return {x_[k + 1], v_[k + 1]};
  const HermiteWeights w = hermite_value(s);
  const Vec x = w.p0 * x_[k] + w.m0 * step_ * xdot_[k] + w.p1 * x_[k + 1] +
                w.m1 * step_ * xdot_[k + 1];
  const Vec v = w.p0 * v_[k] + w.m0 * step_ * vdot_[k] + w.p1 * v_[k + 1] +
                w.m1 * step_ * vdot_[k + 1];
  return {manifold_->retract(x), v};
}

void GeodesicPath::write_csv(std::ostream& os) const {
  const int p = manifold_->point_dim(), n = manifold_->dim();
  os << "t";
  for (int i = 1; i <= p; ++i) os << ",x_" << i;
  for (int i = 1; i <= n; ++i) os << ",v_" << i;
  os << "\n";
  char buf[40];
  for (std::size_t k = 0; k < t_.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", t_[k]);
    os << buf;
    for (int i = 0; i < p; ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", x_[k][i]);
      os << buf;
    }
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v_[k][i]);
      os << buf;
    }
    os << "\n";
  }
}

// ---------------------------------------------------------------------------
// Parallel transport

namespace {

Mat transport_rate(const Manifold& m, const Vec& x, const Vec& v, const Mat& w) {
  const Tensor3 gamma = m.christoffel(x);
  Mat out(w.rows(), w.cols());
  for (int c = 0; c < w.cols(); ++c) out.col(c) = -contract(gamma, v, Vec(w.col(c)));
  return out;
}

}  // namespace

FramePtr parallel_transport(const PathPtr& path, const Mat& w0) {
  const Manifold& m = path->manifold();
  if (w0.rows() != m.dim()) throw PreconditionError("parallel_transport: vector size mismatch");
  const std::size_t n = path->size(), base = path->base_index();
  std::vector<Mat> w(n), wdot(n);
  w[base] = w0;
  const double h = path->step();
  auto step = [&](std::size_t from, std::size_t to) {
    const double dt = path->time(to) - path->time(from);
    const double tm = 0.5 * (path->time(from) + path->time(to));
    const auto [xm, vm] = path->evaluate(tm);
    const Vec &x0 = path->point(from), &v0 = path->velocity(from);
    const Vec &x1 = path->point(to), &v1 = path->velocity(to);
    const Mat k1 = transport_rate(m, x0, v0, w[from]);
    const Mat k2 = transport_rate(m, xm, vm, w[from] + 0.5 * dt * k1);
    const Mat k3 = transport_rate(m, xm, vm, w[from] + 0.5 * dt * k2);
    const Mat k4 = transport_rate(m, x1, v1, w[from] + dt * k3);
    w[to] = w[from] + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  };
  (void)h;
  for (std::size_t k = base; k + 1 < n; ++k) step(k, k + 1);
  for (std::size_t k = base; k > 0; --k) step(k, k - 1);
  for (std::size_t k = 0; k < n; ++k)
    wdot[k] = transport_rate(m, path->point(k), path->velocity(k), w[k]);
  return std::make_shared<TransportedFrame>(path, std::move(w), std::move(wdot));
}

FramePtr parallel_transport(const PathPtr& path, const Vec& w0) {
  return parallel_transport(path, Mat(w0));
}

Mat TransportedFrame::evaluate(double t) const {
  const auto [k, s] = locate(*path_, t);
  if (s == 0.0) return w_[k];
  if (s == 1.0) return w_[k + 1];
  const double h = path_->step();
  const HermiteWeights c = hermite_value(s);
  return c.p0 * w_[k] + c.m0 * h * wdot_[k] + c.p1 * w_[k + 1] + c.m1 * h * wdot_[k + 1];
}

// ---------------------------------------------------------------------------
// Diagnostics

double speed_deviation(const GeodesicPath& path) {
  const Manifold& m = path.manifold();
  const double s0 = norm(m.metric(path.point(path.base_index())), path.velocity(path.base_index()));
  double worst = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k)
    worst = std::max(worst, std::abs(norm(m.metric(path.point(k)), path.velocity(k)) - s0) / s0);
  return worst;
}

double geodesic_residual(const GeodesicPath& path) {
  const Manifold& m = path.manifold();
  const double h = path.step();
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const HermiteWeights d = hermite_slope(0.5);
    const Vec xdot = (d.p0 * path.point(k) + d.m0 * h * path.point_rate(k) +
                      d.p1 * path.point(k + 1) + d.m1 * h * path.point_rate(k + 1)) /
                     h;
    const Vec vdot = (d.p0 * path.velocity(k) + d.m0 * h * path.acceleration(k) +
                      d.p1 * path.velocity(k + 1) + d.m1 * h * path.acceleration(k + 1)) /
                     h;
    const auto [x, v] = path.evaluate(path.time(k) + 0.5 * h);
    const double r1 = (vdot + contract(m.christoffel(x), v, v)).norm();
    const double r2 = (xdot - m.point_velocity(x, v)).norm();
    worst = std::max({worst, r1, r2});
  }
  return worst;
}

double transport_residual(const TransportedFrame& f) {
  const GeodesicPath& path = f.path();
  const Manifold& m = path.manifold();
  const double h = path.step();
  double worst = 0.0;
  const HermiteWeights d = hermite_slope(0.5);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const Mat wdot = (d.p0 * f.at(k) + d.m0 * h * f.rate(k) + d.p1 * f.at(k + 1) +
                      d.m1 * h * f.rate(k + 1)) /
                     h;
    const auto [x, v] = path.evaluate(path.time(k) + 0.5 * h);
    const Mat w = f.evaluate(path.time(k) + 0.5 * h);
    const Mat cov = wdot - transport_rate(m, x, v, w);
    worst = std::max(worst, cov.cwiseAbs().maxCoeff());
  }
  return worst;
}

double transport_gram_drift(const TransportedFrame& f) {
  const GeodesicPath& path = f.path();
  const Manifold& m = path.manifold();
  const std::size_t b = path.base_index();
  const Mat gram0 = f.at(b).transpose() * m.metric(path.point(b)) * f.at(b);
  double worst = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const Mat gram = f.at(k).transpose() * m.metric(path.point(k)) * f.at(k);
    worst = std::max(worst, (gram - gram0).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace tjf
