#include "tjf/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace tjf {

namespace {

// Conformal metric f(s)·id with s = |x|², f(s) = 4 r^4 (r² + σ s)^-2.
struct ConformalFactor {
  double r;
  double sigma;

  double base(double s) const { return r * r + sigma * s; }
  double f(double s) const { return 4.0 * std::pow(r, 4) / std::pow(base(s), 2); }
  double df(double s) const { return -8.0 * sigma * std::pow(r, 4) / std::pow(base(s), 3); }
  double ddf(double s) const { return 24.0 * std::pow(r, 4) / std::pow(base(s), 4); }
};

ChartSpec conformal_chart(int n, ConformalFactor cf) {
  ChartSpec spec;
  spec.dim = n;
  spec.metric = [n, cf](const Vec& x) -> Mat {
    return cf.f(x.squaredNorm()) * Mat::Identity(n, n);
  };
  spec.metric_d1 = [n, cf](const Vec& x) {
    const double d = cf.df(x.squaredNorm());
    Tensor3 t(n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i) t(k, i, i) = 2.0 * d * x[k];
    return t;
  };
  spec.metric_d2 = [n, cf](const Vec& x) {
    const double s = x.squaredNorm();
    const double d = cf.df(s), dd = cf.ddf(s);
    Tensor4 t(n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) {
        const double v = 4.0 * dd * x[k] * x[l] + (k == l ? 2.0 * d : 0.0);
        for (int i = 0; i < n; ++i) t(k, l, i, i) = v;
      }
    return t;
  };
  return spec;
}

ChartSpec flat_chart(int n, Mat g) {
  ChartSpec spec;
  spec.dim = n;
  spec.metric = [g](const Vec&) { return g; };
  spec.metric_d1 = [n](const Vec&) { return Tensor3(n); };
  spec.metric_d2 = [n](const Vec&) { return Tensor4(n); };
  return spec;
}

std::string format_param(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Vec stereographic_to_sphere(const Vec& x, double r) {
  const int n = static_cast<int>(x.size());
  const double s = x.squaredNorm();
  Vec y(n + 1);
  y.head(n) = 2.0 * r * r * x / (r * r + s);
  y[n] = r * (s - r * r) / (r * r + s);
  return y;
}

Vec sphere_to_stereographic(const Vec& y, double r) {
  const int n = static_cast<int>(y.size()) - 1;
  return r * y.head(n) / (r - y[n]);
}

Vec quaternion_multiply(const Vec& a, const Vec& b) {
  Vec out(4);
  out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
  out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
  out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
  out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
  return out;
}

Vec quaternion_move(const Vec& q, const Vec& v, double s) {
  const double angle = s * v.norm();
  Vec e(4);
  e[0] = std::cos(angle);
  if (angle == 0.0) {
    e.tail(3).setZero();
  } else {
    e.tail(3) = std::sin(angle) * v.normalized();
  }
  return quaternion_multiply(q, e);
}

ManifoldPtr euclidean(int n) {
  if (n <= 0) throw PreconditionError("euclidean: dimension must be positive");
  ChartSpec spec = flat_chart(n, Mat::Identity(n, n));
  spec.label = "euclidean(" + std::to_string(n) + ")";
  return std::make_shared<ChartManifold>(std::move(spec));
}

ManifoldPtr sphere(int n, double r, double margin) {
  if (n <= 0) throw PreconditionError("sphere: dimension must be positive");
  if (!(r > 0.0)) throw PreconditionError("sphere: radius must be positive");
  if (!(margin > 0.0)) throw PreconditionError("sphere: margin must be positive");
  ChartSpec spec = conformal_chart(n, {r, 1.0});
  spec.label = "sphere(" + std::to_string(n) + "," + format_param(r) + ")";
  const double bound = margin * r;
  spec.domain = [bound](const Vec& x) { return x.norm() <= bound; };
  spec.distance = [r](const Vec& a, const Vec& b) {
    const double chord = (stereographic_to_sphere(a, r) - stereographic_to_sphere(b, r)).norm();
    return 2.0 * r * std::asin(std::min(1.0, chord / (2.0 * r)));
  };
  spec.sampler = [n, r, bound](std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    for (;;) {
      Vec y(n + 1);
      for (int i = 0; i <= n; ++i) y[i] = g(rng);
      y *= r / y.norm();
      if (y[n] >= r) continue;
      Vec x = sphere_to_stereographic(y, r);
      if (x.norm() <= bound) return x;
    }
  };
  return std::make_shared<ChartManifold>(std::move(spec));
}

ManifoldPtr cylinder(double r) {
  if (!(r > 0.0)) throw PreconditionError("cylinder: radius must be positive");
  Mat g = Mat::Identity(2, 2);
  g(0, 0) = r * r;
  ChartSpec spec = flat_chart(2, g);
  spec.label = "cylinder(" + format_param(r) + ")";
  spec.distance = [r](const Vec& a, const Vec& b) {
    double dt = std::remainder(a[0] - b[0], 2.0 * std::numbers::pi);
    return std::hypot(r * dt, a[1] - b[1]);
  };
  spec.sampler = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ut(-std::numbers::pi, std::numbers::pi), uz(-1, 1);
    Vec x(2);
    x << ut(rng), uz(rng);
    return x;
  };
  return std::make_shared<ChartManifold>(std::move(spec));
}

ManifoldPtr berger_sphere(double eps) {
  if (!(eps > 0.0)) throw PreconditionError("berger_sphere: epsilon must be positive");
  Tensor3 c(3);
  // [e_i, e_j] = 2 ε_ijk e_k for the quaternion units.
  c(2, 0, 1) = 2.0;
  c(2, 1, 0) = -2.0;
  c(0, 1, 2) = 2.0;
  c(0, 2, 1) = -2.0;
  c(1, 2, 0) = 2.0;
  c(1, 0, 2) = -2.0;
  Mat g = Mat::Identity(3, 3);
  g(0, 0) = eps * eps;

  GroupRealization s3;
  s3.point_dim = 4;
  s3.point_velocity = [](const Vec& q, const Vec& v) {
    Vec pure(4);
    pure << 0.0, v[0], v[1], v[2];
    return quaternion_multiply(q, pure);
  };
  s3.move = [](const Vec& q, const Vec& v, double s) { return quaternion_move(q, v, s); };
  s3.retract = [](const Vec& q) { return Vec(q / q.norm()); };
  // Round-sphere great-circle distance (exact for ε = 1).
  s3.distance = [](const Vec& p, const Vec& q) {
    return std::acos(std::clamp(p.normalized().dot(q.normalized()), -1.0, 1.0));
  };
  s3.sampler = [](std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Vec q(4);
    for (int i = 0; i < 4; ++i) q[i] = n(rng);
    return Vec(q / q.norm());
  };
  return std::make_shared<FrameManifold>(3, std::move(c), std::move(g),
                                         "berger_sphere(" + format_param(eps) + ")",
                                         std::move(s3));
}

ManifoldPtr hyperbolic(int n, double r, double margin) {
  if (n <= 0) throw PreconditionError("hyperbolic: dimension must be positive");
  if (!(r > 0.0)) throw PreconditionError("hyperbolic: radius must be positive");
  ChartSpec spec = conformal_chart(n, {r, -1.0});
  spec.label = "hyperbolic(" + std::to_string(n) + "," + format_param(r) + ")";
  const double bound = margin * r;
  spec.domain = [bound](const Vec& x) { return x.norm() <= bound; };
  spec.distance = [r](const Vec& a, const Vec& b) {
    const double num = 2.0 * r * r * (a - b).squaredNorm();
    const double den = (r * r - a.squaredNorm()) * (r * r - b.squaredNorm());
    return r * std::acosh(1.0 + num / den);
  };
  spec.sampler = [n, r](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5 * r, 0.5 * r);
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = u(rng) / std::sqrt(static_cast<double>(n));
    return x;
  };
  spec.nonnegatively_curved = false;
  return std::make_shared<ChartManifold>(std::move(spec));
}

ManifoldPtr product(ManifoldPtr a, ManifoldPtr b) {
  return std::make_shared<ProductManifold>(std::move(a), std::move(b));
}

ManifoldPtr builtin_manifold(std::string_view name, std::span<const double> params) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi)
      throw PreconditionError("manifold '" + std::string(name) + "': expected " +
                              std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                              " parameters, got " + std::to_string(params.size()));
  };
  auto as_dim = [&](double v) {
    if (v != std::floor(v) || v < 1) throw PreconditionError("dimension must be a positive integer");
    return static_cast<int>(v);
  };
  if (name == "euclidean") {
    need(1, 1);
    return euclidean(as_dim(params[0]));
  }
  if (name == "sphere") {
    need(1, 3);
    const double r = params.size() > 1 ? params[1] : 1.0;
    const double margin = params.size() > 2 ? params[2] : 20.0;
    return sphere(as_dim(params[0]), r, margin);
  }
  if (name == "cylinder") {
    need(0, 1);
    return cylinder(params.empty() ? 1.0 : params[0]);
  }
  if (name == "berger_sphere") {
    need(0, 1);
    return berger_sphere(params.empty() ? 1.0 : params[0]);
  }
  if (name == "hyperbolic") {
    need(1, 2);
    return hyperbolic(as_dim(params[0]), params.size() > 1 ? params[1] : 1.0);
  }
  throw PreconditionError("unknown manifold '" + std::string(name) + "'");
}

namespace {

class SpecParser {
 public:
  explicit SpecParser(std::string_view s) : s_(s) {}

  ManifoldPtr parse() {
    ManifoldPtr m = parse_term();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return m;
  }

 private:
  ManifoldPtr parse_term() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string_view name = s_.substr(start, pos_ - start);
    if (name.empty()) fail("expected a manifold name");
    skip_ws();
    if (name == "product") {
      expect('(');
      ManifoldPtr a = parse_term();
      expect(',');
      ManifoldPtr b = parse_term();
      expect(')');
      return product(std::move(a), std::move(b));
    }
    std::vector<double> params;
    if (pos_ < s_.size() && s_[pos_] == '(') {
      ++pos_;
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ')') {
        ++pos_;
      } else {
        for (;;) {
          params.push_back(parse_number());
          skip_ws();
          if (pos_ < s_.size() && s_[pos_] == ',') {
            ++pos_;
            continue;
          }
          expect(')');
          break;
        }
      }
    }
    return builtin_manifold(name, params);
  }

  double parse_number() {
    skip_ws();
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc()) fail("expected a number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return v;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw PreconditionError("manifold spec '" + std::string(s_) + "' at column " +
                            std::to_string(pos_ + 1) + ": " + what);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

ManifoldPtr parse_manifold(std::string_view spec) { return SpecParser(spec).parse(); }

}  // namespace tjf
