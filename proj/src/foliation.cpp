#include "tjf/foliation.hpp"

#include "tjf/jacobi.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <random>

namespace tjf {

Vec covariant_derivative(const Manifold& m, const VectorField& field, const Vec& x, const Vec& u,
                         double fd_step) {
  const Vec fx = field(x);
  if (u.squaredNorm() == 0.0) return Vec::Zero(m.dim());
  const Vec fp = field(m.move(x, u, fd_step));
  const Vec fm = field(m.move(x, u, -fd_step));
  return (fp - fm) / (2.0 * fd_step) + contract(m.christoffel(x), u, fx);
}

// ---------------------------------------------------------------------------
// Catalog

FoliationSpec so2_on_sphere(ManifoldPtr sphere2) {
  if (!sphere2 || sphere2->dim() != 2 || sphere2->label().rfind("sphere", 0) != 0)
    throw PreconditionError("so2_on_sphere needs a stereographic 2-sphere");
  FoliationSpec f;
  f.manifold = std::move(sphere2);
  f.label = "so2_on_sphere";
  f.killing = true;
  f.generators.push_back([](const Vec& x) {
    Vec w(2);
    w << -x[1], x[0];
    return w;
  });
  return f;
}

FoliationSpec hopf_on_s3(ManifoldPtr berger) {
  if (!berger || berger->dim() != 3 || berger->point_dim() != 4)
    throw PreconditionError("hopf_on_s3 needs a Berger sphere (frame backend on S³)");
  FoliationSpec f;
  f.manifold = std::move(berger);
  f.label = "hopf_on_s3";
  f.killing = true;
  f.generators.push_back([](const Vec&) { return Vec(Vec::Unit(3, 0)); });
  return f;
}

FoliationSpec slice_product(ManifoldPtr product, int leaf_factor) {
  const auto* p = dynamic_cast<const ProductManifold*>(product.get());
  if (p == nullptr) throw PreconditionError("slice_product needs a product manifold");
  if (leaf_factor != 0 && leaf_factor != 1)
    throw PreconditionError("slice_product leaf factor must be 0 or 1");
  const int n = product->dim(), na = p->first()->dim();
  const int lo = leaf_factor == 0 ? 0 : na, hi = leaf_factor == 0 ? na : n;
  FoliationSpec f;
  f.manifold = std::move(product);
  f.label = "slice_product(" + std::to_string(leaf_factor) + ")";
  for (int i = lo; i < hi; ++i)
    f.generators.push_back([n, i](const Vec&) { return Vec(Vec::Unit(n, i)); });
  return f;
}

FoliationSpec point_foliation(ManifoldPtr m) {
  FoliationSpec f;
  f.manifold = std::move(m);
  f.label = "point_foliation";
  return f;
}

FoliationSpec cylinder_lines(ManifoldPtr cylinder) {
  if (!cylinder || cylinder->dim() != 2 || cylinder->label().rfind("cylinder", 0) != 0)
    throw PreconditionError("cylinder_lines needs the flat cylinder");
  FoliationSpec f;
  f.manifold = std::move(cylinder);
  f.label = "cylinder_lines";
  f.killing = true;
  f.generators.push_back([](const Vec&) { return Vec(Vec::Unit(2, 1)); });
  return f;
}

FoliationSpec builtin_foliation(std::string_view name, ManifoldPtr m, int leaf_factor) {
  if (name == "so2_on_sphere") return so2_on_sphere(std::move(m));
  if (name == "hopf_on_s3") return hopf_on_s3(std::move(m));
  if (name == "slice_product") return slice_product(std::move(m), leaf_factor);
  if (name == "point_foliation") return point_foliation(std::move(m));
  if (name == "cylinder_lines") return cylinder_lines(std::move(m));
  throw PreconditionError("unknown foliation '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Leaf geometry

namespace {

struct LeafSvd {
  Mat chol;  // lower Cholesky factor of g
  Mat u;     // left singular vectors of Lᵀ X (full)
  Vec sigma;
  int rank = 0;
};

LeafSvd leaf_svd(const FoliationSpec& fol, const Vec& x) {
  const Manifold& m = *fol.manifold;
  const int n = m.dim();
  LeafSvd out;
  const Mat g = metric_at(m, x);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw NumericalError("metric is not positive definite");
  out.chol = llt.matrixL();
  const int count = static_cast<int>(fol.generators.size());
  if (count == 0) {
    out.u = Mat::Identity(n, n);
    out.sigma = Vec(0);
    return out;
  }
  MatrixXd z(n, count);
  for (int i = 0; i < count; ++i)
    z.col(i) = out.chol.transpose() * fol.generators[static_cast<std::size_t>(i)](x);
  Eigen::JacobiSVD<MatrixXd> svd(z, Eigen::ComputeFullU);
  out.u = svd.matrixU();
  out.sigma = svd.singularValues();
  const double cut = std::max(kLeafRankFloor, kLeafRankTol * (out.sigma.size() ? out.sigma[0] : 0.0));
  while (out.rank < out.sigma.size() && out.sigma[out.rank] > cut) ++out.rank;
  return out;
}

}  // namespace

LeafTangent leaf_tangent(const FoliationSpec& fol, const Vec& x) {
  const LeafSvd s = leaf_svd(fol, x);
  LeafTangent out;
  out.rank = s.rank;
  out.basis = s.chol.transpose().triangularView<Eigen::Upper>().solve(s.u.leftCols(s.rank));
  return out;
}

Mat horizontal_basis(const FoliationSpec& fol, const Vec& x) {
  const LeafSvd s = leaf_svd(fol, x);
  const int n = static_cast<int>(s.u.rows());
  return s.chol.transpose().triangularView<Eigen::Upper>().solve(s.u.rightCols(n - s.rank));
}

Vec horizontal_project(const FoliationSpec& fol, const Vec& x, const Vec& w) {
  const LeafTangent lt = leaf_tangent(fol, x);
  if (lt.rank == 0) return w;
  const Mat g = metric_at(*fol.manifold, x);
  return w - lt.basis * (lt.basis.transpose() * (g * w));
}

int generic_rank(const FoliationSpec& fol, std::uint64_t seed, int samples) {
  std::mt19937_64 rng(seed);
  std::map<int, int> counts;
  for (int i = 0; i < samples; ++i) ++counts[leaf_tangent(fol, fol.manifold->sample_point(rng)).rank];
  int best = 0, best_count = -1;
  for (const auto& [rank, c] : counts)
    if (c >= best_count) {
      best = rank;
      best_count = c;
    }
  return best;
}

namespace {

double horizontality(const FoliationSpec& fol, const Vec& x, const Vec& v) {
  const Mat g = fol.manifold->metric(x);
  double worst = 0.0;
  for (const auto& gen : fol.generators) worst = std::max(worst, std::abs(inner(g, gen(x), v)));
  return worst;
}

Vec random_unit_combination(const Mat& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vec c(basis.cols());
  for (int i = 0; i < c.size(); ++i) c[i] = normal(rng);
  return basis * c.normalized();
}

}  // namespace

HorizontalGeodesic horizontal_geodesic(const FoliationSpec& fol, const Vec& x, const Vec& dir,
                                       double length, const GeodesicOptions& opts) {
  const double start = horizontality(fol, x, dir);
  if (start > 1e-8)
    throw PreconditionError("direction is not normal to the leaf of '" + fol.label +
                            "' (defect " + std::to_string(start) + ")");
  HorizontalGeodesic out;
  out.path = integrate_geodesic(fol.manifold, x, dir, 0.0, length, opts);
  for (std::size_t k = 0; k < out.path->size(); ++k)
    out.defect = std::max(out.defect, horizontality(fol, out.path->point(k), out.path->velocity(k)));
  return out;
}

double transnormality_defect(const FoliationSpec& fol, std::uint64_t seed, int count,
                             double length, double step) {
  std::mt19937_64 rng(seed);
  GeodesicOptions opts;
  opts.step = step;
  opts.truncate_at_exit = true;
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const Vec x = fol.manifold->sample_point(rng);
    const Mat h = horizontal_basis(fol, x);
    if (h.cols() == 0) continue;
    const Vec dir = random_unit_combination(h, rng);
    worst = std::max(worst, horizontal_geodesic(fol, x, dir, length, opts).defect);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Accessibility

namespace {

std::vector<VectorField> bracket_fields(const FoliationSpec& fol, int depth, double fd_step) {
  const Manifold& m = *fol.manifold;
  const int n = m.dim();
  std::vector<VectorField> base;
  for (int i = 0; i < n; ++i)
    base.push_back([&fol, n, i](const Vec& x) {
      return horizontal_project(fol, x, Vec(Vec::Unit(n, i)));
    });
  std::vector<VectorField> all = base, previous = base;
  for (int level = 2; level <= depth; ++level) {
    std::vector<VectorField> next;
    for (std::size_t i = 0; i < base.size(); ++i)
      for (std::size_t j = 0; j < previous.size(); ++j) {
        if (level == 2 && j <= i) continue;  // antisymmetry
        const VectorField f = base[i], g = previous[j];
        next.push_back([&m, f, g, fd_step](const Vec& x) {
          return Vec(covariant_derivative(m, g, x, f(x), fd_step) -
                     covariant_derivative(m, f, x, g(x), fd_step));
        });
      }
    all.insert(all.end(), next.begin(), next.end());
    previous = std::move(next);
  }
  return all;
}

struct SpanResult {
  Mat basis;
  std::vector<double> sigma;
  int rank = 0;
};

SpanResult bracket_span(const FoliationSpec& fol, const Vec& x, int depth, double fd_step) {
  if (depth < 1) throw PreconditionError("accessibility depth must be at least 1");
  const Manifold& m = *fol.manifold;
  const int n = m.dim();
  const auto fields = bracket_fields(fol, depth, fd_step);
  Eigen::LLT<Mat> llt(metric_at(m, x));
  const Mat l = llt.matrixL();
  MatrixXd z(n, static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < fields.size(); ++i)
    z.col(static_cast<Eigen::Index>(i)) = l.transpose() * fields[i](x);
  Eigen::JacobiSVD<MatrixXd> svd(z, Eigen::ComputeFullU);
  const auto& s = svd.singularValues();
  // Nested differences lose accuracy with each level.
  const double rel = depth <= 2 ? 1e-6 : 1e-3;
  const double cut = std::max(1e-9, rel * (s.size() ? s[0] : 0.0));
  SpanResult out;
  for (Eigen::Index i = 0; i < s.size(); ++i) out.sigma.push_back(s[i]);
  while (out.rank < s.size() && s[out.rank] > cut) ++out.rank;
  out.basis = l.transpose().triangularView<Eigen::Upper>().solve(
      Mat(svd.matrixU().leftCols(out.rank)));
  return out;
}

}  // namespace

AccessibilityResult accessibility_rank(const FoliationSpec& fol, const Vec& x, int depth,
                                       double fd_step) {
  const SpanResult a = bracket_span(fol, x, depth, fd_step);
  const SpanResult b = bracket_span(fol, x, depth, 0.5 * fd_step);
  AccessibilityResult out;
  out.rank = a.rank;
  out.rank_half_step = b.rank;
  out.conclusive = a.rank == b.rank;
  out.singular_values = a.sigma;
  return out;
}

Mat accessibility_span(const FoliationSpec& fol, const Vec& x, int depth, double fd_step) {
  return bracket_span(fol, x, depth, fd_step).basis;
}

// ---------------------------------------------------------------------------
// Dual leaves

namespace {

// Unit vectors of a deterministic net on the sphere of R^q.
std::vector<Vec> direction_net(int q, std::size_t count) {
  std::vector<Vec> out;
  if (q == 0) return out;
  if (q == 1) {
    out.push_back(Vec::Constant(1, 1.0));
    out.push_back(Vec::Constant(1, -1.0));
    return out;
  }
  if (q == 2) {
    for (std::size_t i = 0; i < count; ++i) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
    return out;
  }
  if (q == 3) {
    // Fibonacci sphere.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t i = 0; i < count; ++i) {
      const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
      const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double a = golden * static_cast<double>(i);
      Vec v(3);
      v << rad * std::cos(a), rad * std::sin(a), z;
      out.push_back(v);
    }
    return out;
  }
  std::mt19937_64 rng(0x5eed0000ULL + static_cast<std::uint64_t>(q));
  std::normal_distribution<double> normal;
  for (std::size_t i = 0; i < count; ++i) {
    Vec v(q);
    for (int j = 0; j < q; ++j) v[j] = normal(rng);
    out.push_back(v.normalized());
  }
  return out;
}

// The r-th singular value of the generator values in g-orthonormal terms;
// it vanishes where the leaf rank drops below r.
double rank_gap(const FoliationSpec& fol, const Vec& x, int r) {
  if (r <= 0) return 1.0;
  const Manifold& m = *fol.manifold;
  Eigen::LLT<Mat> llt(m.metric(x));
  const Mat l = llt.matrixL();
  MatrixXd z(m.dim(), static_cast<Eigen::Index>(fol.generators.size()));
  for (std::size_t i = 0; i < fol.generators.size(); ++i)
    z.col(static_cast<Eigen::Index>(i)) = l.transpose() * fol.generators[i](x);
  Eigen::JacobiSVD<MatrixXd> svd(z);
  const auto& s = svd.singularValues();
  return r - 1 < s.size() ? s[r - 1] : 0.0;
}

}  // namespace

void DualLeafCloud::write_csv(std::ostream& os) const {
  if (points.empty()) return;
  const auto p = points.front().size();
  for (Eigen::Index i = 0; i < p; ++i) os << (i ? "," : "") << "x_" << (i + 1);
  os << "\n";
  char buf[40];
  for (const auto& x : points) {
    for (Eigen::Index i = 0; i < p; ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.17g", i ? "," : "", x[i]);
      os << buf;
    }
    os << "\n";
  }
}

DualLeafCloud dual_leaf_trace(const FoliationSpec& fol, const Vec& p, const DualLeafOptions& opts) {
  const Manifold& m = *fol.manifold;
  if (!m.in_domain(p)) throw DomainError("dual-leaf base point outside the domain");
  DualLeafCloud cloud;
  cloud.base = p;
  cloud.generic_rank = generic_rank(fol, 0x7a11ULL);
  cloud.points.push_back(p);

  const std::size_t singular_net =
      std::clamp<std::size_t>(std::bit_floor(std::max<std::size_t>(opts.budget / 16, 1)), 4, 4096);
  const std::size_t regular_net = std::clamp<std::size_t>(
      std::bit_floor(static_cast<std::size_t>(std::cbrt(static_cast<double>(opts.budget)))), 4, 64);
  std::vector<int> levels;
  auto add_frontier = [&](const Vec& x, int level) {
    for (const auto& f : cloud.frontier)
      if (m.distance(f, x) < 1e-6) return;
    cloud.frontier.push_back(x);
    cloud.frontier_singular.push_back(leaf_tangent(fol, x).rank < cloud.generic_rank);
    levels.push_back(level);
  };
  add_frontier(p, 0);

  GeodesicOptions gopts;
  gopts.step = opts.step;
  gopts.truncate_at_exit = true;
  const std::size_t stride =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opts.sample_spacing / opts.step)));

  for (std::size_t qi = 0; qi < cloud.frontier.size() && !cloud.exhausted; ++qi) {
    const int level = levels[qi];
    if (level >= opts.depth) continue;
    const Vec x = cloud.frontier[qi];
    const Mat h = horizontal_basis(fol, x);
    const bool singular = cloud.frontier_singular[qi];
    const auto net = direction_net(static_cast<int>(h.cols()), singular ? singular_net : regular_net);
    for (const auto& u : net) {
      if (cloud.budget_used >= opts.budget) {
        cloud.exhausted = true;
        break;
      }
      ++cloud.budget_used;
      Vec dir = h * u;
      dir /= norm(m.metric(x), dir);
      PathPtr path;
      try {
        path = integrate_geodesic(fol.manifold, x, dir, 0.0, opts.segment_length, gopts);
      } catch (const DomainError&) {
        continue;  // leaves the chart within the first step
      }
      DualLeafSegment seg;
      seg.start = x;
      seg.direction = dir;
      seg.length = path->t_end();
      seg.level = level;
      seg.origin = qi;
      seg.truncated = path->truncated();
      seg.start_defect = horizontality(fol, x, dir);

      // Record cloud points and the singular-value profile.
      std::vector<std::size_t> idx;
      for (std::size_t k = stride; k < path->size(); k += stride) idx.push_back(k);
      if (idx.empty() || idx.back() != path->size() - 1) idx.push_back(path->size() - 1);
      std::vector<double> gap(idx.size());
      double gap_scale = 0.0;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::size_t k = idx[i];
        cloud.points.push_back(path->point(k));
        seg.defect = std::max(seg.defect, horizontality(fol, path->point(k), path->velocity(k)));
        gap[i] = rank_gap(fol, path->point(k), cloud.generic_rank);
        gap_scale = std::max(gap_scale, gap[i]);
      }
      // Singular leaves met along the segment.
      for (std::size_t i = 0; i < idx.size() && cloud.generic_rank > 0; ++i) {
        const bool left = i == 0 || gap[i] <= gap[i - 1];
        const bool right = i + 1 == idx.size() || gap[i] < gap[i + 1];
        if (!(left && right) || gap[i] > 0.1 * gap_scale) continue;
        const double a = path->time(i == 0 ? 0 : idx[i - 1]);
        const double b = path->time(i + 1 == idx.size() ? idx[i] : idx[i + 1]);
        if (b < 0.05) continue;  // the launch point itself
        std::uintmax_t iters = 200;
        const auto best = boost::math::tools::brent_find_minima(
            [&](double t) {
              const double s = rank_gap(fol, path->evaluate(t).first, cloud.generic_rank);
              return s * s;
            },
            std::max(a, 0.05), b, std::numeric_limits<double>::digits / 2, iters);
        if (std::sqrt(best.second) <= 1e-6 * gap_scale)
          add_frontier(path->evaluate(best.first).first, level + 1);
      }
      if (!path->truncated()) add_frontier(path->point(path->size() - 1), level + 1);
      cloud.segments.push_back(std::move(seg));
    }
  }
  return cloud;
}

std::vector<Vec> reference_net(const Manifold& m, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(m.sample_point(rng));
  return out;
}

double covering_radius(const Manifold& m, const std::vector<Vec>& cloud,
                       const std::vector<Vec>& net, int candidates) {
  if (cloud.empty()) return std::numeric_limits<double>::infinity();
  const auto dim = cloud.front().size();
  MatrixXd pts(dim, static_cast<Eigen::Index>(cloud.size()));
  for (std::size_t i = 0; i < cloud.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = cloud[i];
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(candidates), cloud.size());
  std::vector<std::pair<double, std::size_t>> order(cloud.size());
  double worst = 0.0;
  for (const auto& y : net) {
    const VectorXd d2 = (pts.colwise() - VectorXd(y)).colwise().squaredNorm().transpose();
    for (std::size_t i = 0; i < cloud.size(); ++i) order[i] = {d2[static_cast<Eigen::Index>(i)], i};
    std::nth_element(order.begin(), order.begin() + static_cast<long>(keep - 1), order.end());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < keep; ++i) best = std::min(best, m.distance(y, cloud[order[i].second]));
    worst = std::max(worst, best);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Flats

ResidualReport flat_check(const FoliationSpec& fol, const Vec& p, const Vec& x, const Vec& v,
                          const FlatCheckOptions& opts) {
  const ManifoldPtr& mp = fol.manifold;
  const Manifold& m = *mp;
  const Mat g = metric_at(m, p);
  if (std::abs(norm(g, x) - 1.0) > 1e-10 || std::abs(norm(g, v) - 1.0) > 1e-10 ||
      std::abs(inner(g, x, v)) > 1e-10)
    throw PreconditionError("flat check needs orthonormal x and v");
  const double leaf_defect = horizontality(fol, p, x);
  if (leaf_defect > 1e-8)
    throw PreconditionError("x is not normal to the leaf (defect " + std::to_string(leaf_defect) + ")");

  ResidualReport rep("flat " + fol.label);
  const Mat span = accessibility_span(fol, p, opts.certificate_depth);
  const double cert = span.cols() ? (span.transpose() * (g * v)).norm() : 0.0;
  if (cert > opts.certificate_tolerance && opts.enforce_certificate)
    throw PreconditionError("v is not normal to the dual leaf: certificate defect " +
                            std::to_string(cert));
  rep.add("flat.dual_certificate", cert, opts.certificate_tolerance);

  GeodesicOptions gopts;
  gopts.step = opts.step;
  const double T = opts.extent;
  const int G = std::max(2, opts.grid);
  auto base = integrate_geodesic(mp, p, x, 0.0, T, gopts);
  auto transported = parallel_transport(base, v);

  // (i) curvature of the planes spanned by ∂t and ∂s.
  double sect = 0.0;
  for (int i = 0; i < G; ++i) {
    const std::size_t k = base->nearest_index(T * i / (G - 1));
    const Vec& ck = base->point(k);
    Vec vk = transported->at(k).col(0);
    vk /= norm(m.metric(ck), vk);
    auto line = integrate_geodesic(mp, ck, vk, 0.0, T, gopts);
    const JacobiField j = integrate_jacobi(line, base->velocity(k), Vec::Zero(m.dim()));
    for (int jj = 0; jj < G; ++jj) {
      const std::size_t s = line->nearest_index(T * jj / (G - 1));
      sect = std::max(sect, std::abs(sectional(m, line->point(s), j.tangent_value(s), line->velocity(s))));
    }
  }
  rep.add("flat.sectional", sect, opts.sectional_tolerance);

  // (ii) geodesics tangent to the surface stay on it.
  double geodesy = 0.0;
  const int A = std::max(2, opts.angles);
  for (int i = 0; i < A; ++i) {
    const double alpha = 0.5 * std::numbers::pi * i / (A - 1);
    const Vec dir = std::cos(alpha) * x + std::sin(alpha) * v;
    auto ray = integrate_geodesic(mp, p, dir / norm(g, dir), 0.0, T, gopts);
    for (int jj = 1; jj < G; ++jj) {
      const double r = T * jj / (G - 1);
      const double a = r * std::cos(alpha), b = r * std::sin(alpha);
      const auto [ca, va_unused] = base->evaluate(a);
      (void)va_unused;
      Vec point = ca;
      if (b > 1e-12) {
        Vec w = transported->evaluate(a).col(0);
        w /= norm(m.metric(ca), w);
        auto seg = integrate_geodesic(mp, ca, w, 0.0, b, gopts);
        point = seg->evaluate(b).first;
      }
      geodesy = std::max(geodesy, m.distance(ray->evaluate(r).first, point));
    }
  }
  rep.add("flat.total_geodesy", geodesy, opts.geodesy_tolerance);
  return rep;
}

}  // namespace tjf
