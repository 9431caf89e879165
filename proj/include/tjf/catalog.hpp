#pragma once

#include "tjf/manifold.hpp"

#include <span>
#include <string>
#include <string_view>

namespace tjf {

ManifoldPtr euclidean(int n);

// Stereographic chart of the round n-sphere of radius r, projected from the
// north pole: g = 4 r^4 / (r^2 + |x|^2)^2 · id. The origin is the south pole.
// The domain is |x| <= margin * r.
ManifoldPtr sphere(int n, double radius, double margin = 20.0);

// Flat cylinder S¹(r) × R in coordinates (θ, z).
ManifoldPtr cylinder(double radius);

// Left-invariant metric diag(ε², 1, 1) on the unit quaternions, frame
// e_i(q) = q·{i, j, k}_i. The first frame direction is tangent to the Hopf fiber;
// ε = 1 is the round unit 3-sphere.
ManifoldPtr berger_sphere(double epsilon);

// Poincaré ball of curvature -1/r². Not part of the nonnegatively curved
// catalog; used to exercise hypothesis gates.
ManifoldPtr hyperbolic(int n, double radius = 1.0, double margin = 0.9);

ManifoldPtr product(ManifoldPtr a, ManifoldPtr b);

// Name + parameter lookup for the leaf manifolds of the catalog.
ManifoldPtr builtin_manifold(std::string_view name, std::span<const double> params);

// Parses e.g. "sphere(2,1)" or "product(sphere(2,1),euclidean(2))".
ManifoldPtr parse_manifold(std::string_view spec);

// Closed-form maps used by oracles, samplers and distances.
Vec stereographic_to_sphere(const Vec& x, double radius);
Vec sphere_to_stereographic(const Vec& y, double radius);
Vec quaternion_multiply(const Vec& a, const Vec& b);
// q · exp(s · (v1 i + v2 j + v3 k)).
Vec quaternion_move(const Vec& q, const Vec& v, double s);

}  // namespace tjf
