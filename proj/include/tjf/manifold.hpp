#pragma once

#include "tjf/linalg.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

namespace tjf {

// An evaluatable Riemannian manifold. Tangent vectors are given in components
// of a basis field e_1..e_n: coordinate fields for charts, a global frame for
// homogeneous backends. With ∇_{e_i} e_j = Γ^k_ij e_k the covariant derivative
// along a curve with velocity v is dW/dt + Γ(v, W) in either case.
//
// Backends are immutable after construction and safe to share between threads.
class Manifold {
 public:
  virtual ~Manifold() = default;

  virtual int dim() const = 0;
  // Length of the point representation (n for charts, 4 for the S³ group).
  virtual int point_dim() const { return dim(); }
  virtual const std::string& label() const = 0;
  virtual bool in_domain(const Vec& p) const = 0;

  virtual Mat metric(const Vec& p) const = 0;
  virtual Tensor3 christoffel(const Vec& p) const = 0;
  virtual Tensor4 curvature(const Vec& p) const = 0;

  // dp/dt of a curve through p with velocity components v.
  virtual Vec point_velocity(const Vec& p, const Vec& v) const = 0;
  // A curve s -> move(p, v, s) through p with velocity v at s = 0.
  virtual Vec move(const Vec& p, const Vec& v, double s) const = 0;
  // Projects a numerically drifted point back onto the model (identity for charts).
  virtual Vec retract(const Vec& p) const { return p; }

  // Riemannian distance where a closed form exists; otherwise a
  // documented proxy (see the concrete backends).
  virtual double distance(const Vec& p, const Vec& q) const = 0;
  virtual Vec sample_point(std::mt19937_64& rng) const = 0;

  // Catalog manifolds are nonnegatively curved; test-only overrides are not.
  virtual bool nonnegatively_curved() const { return true; }

  // Product backends expose their factors; other backends return 1.
  virtual int factor_count() const { return 1; }
};

using ManifoldPtr = std::shared_ptr<const Manifold>;

// ---------------------------------------------------------------------------
// Chart backend

struct ChartSpec {
  int dim = 0;
  std::string label;
  std::function<Mat(const Vec&)> metric;
  // ∂_k g_ij at (k, i, j). Optional.
  std::function<Tensor3(const Vec&)> metric_d1;
  // ∂_k ∂_l g_ij at (k, l, i, j). Optional.
  std::function<Tensor4(const Vec&)> metric_d2;
  std::function<bool(const Vec&)> domain;
  std::function<double(const Vec&, const Vec&)> distance;
  std::function<Vec(std::mt19937_64&)> sampler;
  bool nonnegatively_curved = true;
};

class ChartManifold final : public Manifold {
 public:
  explicit ChartManifold(ChartSpec spec);

  int dim() const override { return spec_.dim; }
  const std::string& label() const override { return spec_.label; }
  bool in_domain(const Vec& p) const override;
  Mat metric(const Vec& p) const override;
  Tensor3 christoffel(const Vec& p) const override;
  Tensor4 curvature(const Vec& p) const override;
  Vec point_velocity(const Vec&, const Vec& v) const override { return v; }
  Vec move(const Vec& p, const Vec& v, double s) const override { return p + s * v; }
  double distance(const Vec& p, const Vec& q) const override;
  Vec sample_point(std::mt19937_64& rng) const override;
  bool nonnegatively_curved() const override { return spec_.nonnegatively_curved; }

  bool has_analytic_d1() const { return static_cast<bool>(spec_.metric_d1); }
  bool has_analytic_d2() const { return static_cast<bool>(spec_.metric_d2); }

  Tensor3 metric_d1(const Vec& p) const;
  Tensor4 metric_d2(const Vec& p) const;
  // Fourth-order central finite differences, step 1e-4 * (1 + |x|).
  Tensor3 metric_d1_fd(const Vec& p) const;
  Tensor4 metric_d2_fd(const Vec& p) const;

 private:
  ChartSpec spec_;
};

// ---------------------------------------------------------------------------
// Homogeneous (global frame) backend

// How the abstract frame acts on concrete points. The frame fields are
// left-invariant on a Lie group realized in R^point_dim.
struct GroupRealization {
  int point_dim = 0;
  std::function<Vec(const Vec& p, const Vec& v)> point_velocity;
  std::function<Vec(const Vec& p, const Vec& v, double s)> move;
  std::function<Vec(const Vec& p)> retract;
  std::function<double(const Vec&, const Vec&)> distance;
  std::function<Vec(std::mt19937_64&)> sampler;
};

class FrameManifold final : public Manifold {
 public:
  // structure(k, i, j) = c_ij^k with [e_i, e_j] = c_ij^k e_k.
  FrameManifold(int dim, Tensor3 structure, Mat frame_metric, std::string label,
                GroupRealization realization);

  int dim() const override { return dim_; }
  int point_dim() const override { return realization_.point_dim; }
  const std::string& label() const override { return label_; }
  bool in_domain(const Vec& p) const override;
  Mat metric(const Vec&) const override { return frame_metric_; }
  Tensor3 christoffel(const Vec&) const override { return gamma_; }
  Tensor4 curvature(const Vec&) const override { return riemann_; }
  Vec point_velocity(const Vec& p, const Vec& v) const override;
  Vec move(const Vec& p, const Vec& v, double s) const override;
  Vec retract(const Vec& p) const override;
  double distance(const Vec& p, const Vec& q) const override;
  Vec sample_point(std::mt19937_64& rng) const override;

  const Tensor3& structure() const { return structure_; }
  // Bracket of constant-coefficient fields: [u, v]^k = c_ij^k u^i v^j.
  Vec bracket(const Vec& u, const Vec& v) const;

 private:
  int dim_;
  Tensor3 structure_;
  Mat frame_metric_;
  std::string label_;
  GroupRealization realization_;
  Tensor3 gamma_;
  Tensor4 riemann_;
};

// ---------------------------------------------------------------------------
// Riemannian product, block-diagonal in points and tangent vectors.

class ProductManifold final : public Manifold {
 public:
  ProductManifold(ManifoldPtr first, ManifoldPtr second);

  int dim() const override { return a_->dim() + b_->dim(); }
  int point_dim() const override { return a_->point_dim() + b_->point_dim(); }
  const std::string& label() const override { return label_; }
  bool in_domain(const Vec& p) const override;
  Mat metric(const Vec& p) const override;
  Tensor3 christoffel(const Vec& p) const override;
  Tensor4 curvature(const Vec& p) const override;
  Vec point_velocity(const Vec& p, const Vec& v) const override;
  Vec move(const Vec& p, const Vec& v, double s) const override;
  Vec retract(const Vec& p) const override;
  double distance(const Vec& p, const Vec& q) const override;
  Vec sample_point(std::mt19937_64& rng) const override;
  bool nonnegatively_curved() const override;
  int factor_count() const override { return 2; }

  const ManifoldPtr& first() const { return a_; }
  const ManifoldPtr& second() const { return b_; }

  Vec point_block(const Vec& p, int factor) const;
  Vec tangent_block(const Vec& v, int factor) const;
  Vec join_points(const Vec& p, const Vec& q) const;
  Vec join_tangents(const Vec& u, const Vec& v) const;

 private:
  ManifoldPtr a_, b_;
  std::string label_;
};

// ---------------------------------------------------------------------------
// Evaluation helpers. All check the domain and throw DomainError outside it.

Mat metric_at(const Manifold& m, const Vec& x);
Tensor3 christoffel(const Manifold& m, const Vec& x);
Vec riemann(const Manifold& m, const Vec& x, const Vec& u, const Vec& v, const Vec& w);
double inner(const Mat& g, const Vec& u, const Vec& v);
double norm(const Mat& g, const Vec& u);

/// Sectional curvature of span{u, v}; throws PreconditionError for a degenerate plane.
double sectional(const Manifold& m, const Vec& x, const Vec& u, const Vec& v);

struct CurvatureSample {
  Vec point;
  Vec u, v;
  double value = 0.0;
};

// Chart-level Levi-Civita connection and curvature from metric data.
Tensor3 levi_civita(const Mat& g, const Tensor3& dg);
Tensor4 curvature_from_metric(const Mat& g, const Tensor3& dg, const Tensor4& d2g);

// Koszul formula for left-invariant frames with constant inner products.
Tensor3 frame_connection(const Tensor3& structure, const Mat& frame_metric);
Tensor4 frame_curvature(const Tensor3& gamma, const Tensor3& structure);

// Checks that g(x) is symmetric positive definite.
bool metric_is_spd(const Mat& g);

}  // namespace tjf
