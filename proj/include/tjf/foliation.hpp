#pragma once

#include "tjf/geodesic.hpp"
#include "tjf/report.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace tjf {

// A smooth vector field in tangent components of the backend's basis fields.
using VectorField = std::function<Vec(const Vec& point)>;

// A (possibly singular) Riemannian foliation given by generating vector fields:
// the leaf tangent space at p is the span of the generator values at p.
struct FoliationSpec {
  ManifoldPtr manifold;
  std::string label;
  std::vector<VectorField> generators;
  // Generators are Killing fields of an isometric action.
  bool killing = false;
};

// ∇_u X at x, with the component derivative of X taken by central differences
// along the curve s -> move(x, u, s).
Vec covariant_derivative(const Manifold& m, const VectorField& field, const Vec& x, const Vec& u,
                         double fd_step = 1e-5);

// Rotations about the polar axis of the stereographic 2-sphere. Fixed points at
// the poles (the south pole is the chart origin).
FoliationSpec so2_on_sphere(ManifoldPtr sphere2);
// Fibers of the Hopf action q -> q·exp(s i) on a Berger sphere (any ε).
FoliationSpec hopf_on_s3(ManifoldPtr berger);
// Product foliation of A × B. With leaf_factor = 0 the leaves are A × {b};
// with leaf_factor = 1 they are {a} × B.
FoliationSpec slice_product(ManifoldPtr product, int leaf_factor);
// Leaves are points.
FoliationSpec point_foliation(ManifoldPtr m);
// Vertical lines {θ} × R of the flat cylinder.
FoliationSpec cylinder_lines(ManifoldPtr cylinder);

// Catalog lookup: so2_on_sphere, hopf_on_s3, slice_product, point_foliation,
// cylinder_lines. `leaf_factor` is used by slice_product only.
FoliationSpec builtin_foliation(std::string_view name, ManifoldPtr m, int leaf_factor = 0);

struct LeafTangent {
  Mat basis;  // g-orthonormal, n × rank
  int rank = 0;
};

// Relative singular-value threshold for the leaf rank; values below the
// absolute floor also count as zero.
inline constexpr double kLeafRankTol = 1e-8;
inline constexpr double kLeafRankFloor = 1e-9;

LeafTangent leaf_tangent(const FoliationSpec& fol, const Vec& x);
// w minus its g-orthogonal projection onto the leaf tangent space.
Vec horizontal_project(const FoliationSpec& fol, const Vec& x, const Vec& w);
// g-orthonormal basis of the normal space of the leaf at x.
Mat horizontal_basis(const FoliationSpec& fol, const Vec& x);
// Mode of the leaf rank over `samples` random points.
int generic_rank(const FoliationSpec& fol, std::uint64_t seed, int samples = 1000);

struct HorizontalGeodesic {
  PathPtr path;
  // max over samples and generators of |<ċ, X_i>|.
  double defect = 0.0;
};

// Requires dir normal to the leaf (|<dir, X_i>| <= 1e-8) and |dir|_g = 1.
HorizontalGeodesic horizontal_geodesic(const FoliationSpec& fol, const Vec& x, const Vec& dir,
                                       double length, const GeodesicOptions& opts = {});

// Largest horizontality defect of geodesics launched perpendicular to the leaf
// at `count` random points.
double transnormality_defect(const FoliationSpec& fol, std::uint64_t seed, int count = 50,
                             double length = 1.0, double step = 1e-3);

struct AccessibilityResult {
  int rank = 0;
  int rank_half_step = 0;
  bool conclusive = false;
  std::vector<double> singular_values;
};

// Rank of the horizontal distribution and its iterated brackets up to `depth`
// (depth 1: the fields alone). Brackets by central differences of step
// `fd_step`; the computation is repeated at half the step and the result is
// conclusive when both ranks agree.
AccessibilityResult accessibility_rank(const FoliationSpec& fol, const Vec& x, int depth,
                                       double fd_step = 1e-5);
// g-orthonormal basis of the span computed by accessibility_rank at x.
Mat accessibility_span(const FoliationSpec& fol, const Vec& x, int depth, double fd_step = 1e-5);

struct DualLeafOptions {
  std::size_t budget = 10000;   // maximal number of horizontal segments
  int depth = 3;                // breadth-first levels
  double segment_length = 3.141592653589793;
  double sample_spacing = 0.02; // spacing of recorded cloud points along segments
  double step = 1e-3;
};

struct DualLeafSegment {
  Vec start;
  Vec direction;
  double length = 0.0;
  int level = 0;
  std::size_t origin = 0;  // index of the frontier point it was launched from
  bool truncated = false;
  // Largest horizontality defect along the segment (at its start: first entry).
  double start_defect = 0.0;
  double defect = 0.0;
};

struct DualLeafCloud {
  Vec base;
  std::vector<Vec> frontier;       // launch points, frontier[0] = base
  std::vector<bool> frontier_singular;
  std::vector<DualLeafSegment> segments;
  std::vector<Vec> points;
  std::size_t budget_used = 0;
  bool exhausted = false;
  int generic_rank = 0;

  // Columns: x_1..x_p of every cloud point.
  void write_csv(std::ostream& os) const;
};

// Breadth-first exploration of the dual leaf through p by horizontal geodesics.
// At points where the leaf rank drops below the generic rank the normal space
// grows and the direction net is refined.
DualLeafCloud dual_leaf_trace(const FoliationSpec& fol, const Vec& p,
                              const DualLeafOptions& opts = {});

// Points from sample_point on a fixed seed, used as a budget-independent yardstick.
std::vector<Vec> reference_net(const Manifold& m, int count = 2000, std::uint64_t seed = 20240611);

// max over the net of the distance to the nearest cloud point. Candidates are
// preselected by point-coordinate distance (`candidates` nearest) before the
// backend distance is evaluated.
double covering_radius(const Manifold& m, const std::vector<Vec>& cloud,
                       const std::vector<Vec>& net, int candidates = 32);

struct FlatCheckOptions {
  double extent = 1.0;  // parameter square [0, extent]^2
  int grid = 6;         // samples per side
  int angles = 5;       // launch angles for the total-geodesy check
  double step = 1e-3;
  bool enforce_certificate = true;
  double certificate_tolerance = 1e-4;
  double sectional_tolerance = 1e-8;
  double geodesy_tolerance = 1e-5;
  int certificate_depth = 2;
};

// Checks that the unit orthogonal vectors x (normal to the leaf) and v (normal
// to the dual leaf) span a totally geodesic flat through p. The dual-leaf
// normality of v is certified against the accessibility span at p; when the
// certificate fails and enforce_certificate is set, throws PreconditionError.
ResidualReport flat_check(const FoliationSpec& fol, const Vec& p, const Vec& x, const Vec& v,
                          const FlatCheckOptions& opts = {});

}  // namespace tjf
