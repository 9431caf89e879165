#pragma once

#include "tjf/manifold.hpp"

#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

namespace tjf {

struct GeodesicOptions {
  double step = 1e-3;
  // Stop at the last in-domain sample instead of throwing DomainError.
  bool truncate_at_exit = false;
};

// A discretized unit-speed geodesic on the uniform grid t_k = (k - base) * step.
// Samples store point, velocity and their exact ODE derivatives so that the
// cubic Hermite interpolant is available between nodes.
class GeodesicPath {
 public:
  const Manifold& manifold() const { return *manifold_; }
  const ManifoldPtr& manifold_ptr() const { return manifold_; }

  std::size_t size() const { return t_.size(); }
  std::size_t base_index() const { return base_; }
  double step() const { return step_; }
  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }
  double time(std::size_t k) const { return t_[k]; }
  const Vec& point(std::size_t k) const { return x_[k]; }
  const Vec& velocity(std::size_t k) const { return v_[k]; }
  const Vec& point_rate(std::size_t k) const { return xdot_[k]; }
  const Vec& acceleration(std::size_t k) const { return vdot_[k]; }

  // Index of the sample nearest to t (clamped).
  std::size_t nearest_index(double t) const;
  // Hermite interpolant; exact at nodes. Throws PreconditionError outside [t_begin, t_end].
  std::pair<Vec, Vec> evaluate(double t) const;

  bool truncated() const { return truncated_; }
  // Parameter of the first out-of-domain step when truncated.
  double exit_parameter() const { return exit_parameter_; }

  // Columns: t, x_1..x_p, v_1..v_n.
  void write_csv(std::ostream& os) const;

 private:
  friend std::shared_ptr<const GeodesicPath> integrate_geodesic(ManifoldPtr, const Vec&,
                                                                const Vec&, double, double,
                                                                const GeodesicOptions&);
  ManifoldPtr manifold_;
  double step_ = 0.0;
  std::size_t base_ = 0;
  std::vector<double> t_;
  std::vector<Vec> x_, v_, xdot_, vdot_;
  bool truncated_ = false;
  double exit_parameter_ = 0.0;
};

using PathPtr = std::shared_ptr<const GeodesicPath>;

// Integrates c(0) = x0, ċ(0) = v0 over [t_begin, t_end] (t_begin <= 0 <= t_end)
// with classical RK4. The grid is extended to whole multiples of the step.
// Requires |v0|_g = 1 within 1e-10.
PathPtr integrate_geodesic(ManifoldPtr m, const Vec& x0, const Vec& v0, double t_begin,
                           double t_end, const GeodesicOptions& opts = {});

inline PathPtr integrate_geodesic(ManifoldPtr m, const Vec& x0, const Vec& v0, double t_end,
                                  const GeodesicOptions& opts = {}) {
  return integrate_geodesic(std::move(m), x0, v0, 0.0, t_end, opts);
}

// Vector fields along a path obtained by parallel transport of their values at
// t = 0; one column per transported vector.
class TransportedFrame {
 public:
  TransportedFrame(PathPtr path, std::vector<Mat> values, std::vector<Mat> rates)
      : path_(std::move(path)), w_(std::move(values)), wdot_(std::move(rates)) {}

  const GeodesicPath& path() const { return *path_; }
  const PathPtr& path_ptr() const { return path_; }
  int columns() const { return static_cast<int>(w_.front().cols()); }
  const Mat& at(std::size_t k) const { return w_[k]; }
  // dW/dt in components (equal to -Γ(ċ, W)).
  const Mat& rate(std::size_t k) const { return wdot_[k]; }
  Mat evaluate(double t) const;

 private:
  PathPtr path_;
  std::vector<Mat> w_, wdot_;
};

using FramePtr = std::shared_ptr<const TransportedFrame>;

FramePtr parallel_transport(const PathPtr& path, const Mat& w0);
FramePtr parallel_transport(const PathPtr& path, const Vec& w0);

// Invariant diagnostics.
double speed_deviation(const GeodesicPath& path);       // max | |v_k|_g - |v_0|_g | / |v_0|_g
double geodesic_residual(const GeodesicPath& path);     // ODE residual of the interpolant at midpoints
double transport_residual(const TransportedFrame& f);   // |DW/dt| of the interpolant at midpoints
double transport_gram_drift(const TransportedFrame& f); // max |<W_a, W_b>(t) - <W_a, W_b>(0)|

}  // namespace tjf
