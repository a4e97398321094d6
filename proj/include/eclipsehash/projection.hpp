#pragma once

// Inverse stereographic projection of V = R^N onto the unit sphere S in
// R^(N+1), the forward projection back to V, and the shape that an ambient
// hyperplane cuts out of V.
//
// With r^2 = |x|^2 the inverse projection is
//   f^-1(x; d) = (2 d x_1, ..., 2 d x_N, r^2 - d^2) / (d^2 + r^2).
// The origin goes to the south pole, the sphere |x| = d to the equator and
// infinity to the north pole (0, ..., 0, 1).

#include <span>
#include <variant>

#include "eclipsehash/core.hpp"

namespace eclipsehash {

/// A point of R^(N+1); last entry is the polar coordinate.
using TildePoint = Vector;

class PoleError : public Error {
 public:
  using Error::Error;
};

class NoIntersectionError : public Error {
 public:
  using Error::Error;
};

inline constexpr double kPoleGuard = 1e-12;
inline constexpr double kPlaneBranchTolerance = 1e-12;

/// Compensated sum of squares.
double squared_norm(std::span<const double> x);

TildePoint inverse_stereographic(FeatureView x, double d);

/// Writes f^-1(x; d) into `out` (length N+1) without allocating.
void inverse_stereographic_into(FeatureView x, double d, std::span<double> out);

/// x_i = d p_i / (1 - p_{N+1}). Throws PoleError within kPoleGuard of the north pole.
Vector stereographic(std::span<const double> p, double d);

struct TildeHyperplane {
  Vector normal;  // length N+1, nonzero
  double offset = 0.0;
};

/// sum_i normal_i x_i + offset = 0 in V.
struct AffinePlane {
  Vector normal;
  double offset = 0.0;
};

struct Hypersphere {
  Vector center;
  double radius = 0.0;
};

using InducedShape = std::variant<AffinePlane, Hypersphere>;

/// Image under f of the intersection of `h` with S: an affine hyperplane when
/// h passes through the north pole, otherwise a hypersphere. Throws
/// NoIntersectionError when h misses S.
InducedShape induced_shape(const TildeHyperplane& h, double d);

}  // namespace eclipsehash
