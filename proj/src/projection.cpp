#include "eclipsehash/projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace eclipsehash {

namespace {

void require_positive_d(double d) {
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw ParameterError("projection parameter d must be positive and finite, got " +
                         std::to_string(d));
  }
}

}  // namespace

double squared_norm(std::span<const double> x) {
  // Neumaier summation
  double sum = 0.0;
  double carry = 0.0;
  for (double v : x) {
    const double term = v * v;
    const double t = sum + term;
    if (std::abs(sum) >= term) {
      carry += (sum - t) + term;
    } else {
      carry += (term - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

void inverse_stereographic_into(FeatureView x, double d, std::span<double> out) {
  require_positive_d(d);
  if (out.size() != x.size() + 1) {
    throw DimensionError("inverse_stereographic: output must have length N+1");
  }
  const double r2 = squared_norm(x);
  const double d2 = d * d;
  const double inv = 1.0 / (d2 + r2);
  const double scale = 2.0 * d * inv;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = scale * x[i];
  }
  out[x.size()] = (r2 - d2) / (d2 + r2);
}

TildePoint inverse_stereographic(FeatureView x, double d) {
  TildePoint p(static_cast<Eigen::Index>(x.size() + 1));
  inverse_stereographic_into(x, d, {p.data(), static_cast<std::size_t>(p.size())});
  return p;
}

Vector stereographic(std::span<const double> p, double d) {
  require_positive_d(d);
  if (p.size() < 2) {
    throw DimensionError("stereographic: point needs at least 2 coordinates");
  }
  const std::size_t n = p.size() - 1;
  const double gap = 1.0 - p[n];
  if (gap <= kPoleGuard) {
    throw PoleError("stereographic: point lies within 1e-12 of the north pole");
  }
  Vector x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    x[static_cast<Eigen::Index>(i)] = d * p[i] / gap;
  }
  return x;
}

InducedShape induced_shape(const TildeHyperplane& h, double d) {
  require_positive_d(d);
  const Eigen::Index ambient = h.normal.size();
  if (ambient < 2) {
    throw DimensionError("induced_shape: hyperplane normal needs length N+1 >= 2");
  }
  const double normal_sq = h.normal.squaredNorm();
  if (normal_sq == 0.0) {
    throw ParameterError("induced_shape: zero normal");
  }
  const Eigen::Index n = ambient - 1;
  const double scale = std::sqrt(normal_sq + h.offset * h.offset);
  const double denom = h.normal[n] + h.offset;

  const double radicand = normal_sq - h.offset * h.offset;
  if (radicand < -kPlaneBranchTolerance * scale * scale) {
    throw NoIntersectionError("induced_shape: hyperplane does not meet the unit sphere");
  }

  if (std::abs(denom) <= kPlaneBranchTolerance * scale) {
    return AffinePlane{h.normal.head(n), d * h.offset};
  }
  Hypersphere sphere;
  sphere.center = (-d / denom) * h.normal.head(n);
  sphere.radius = std::abs(d / denom) * std::sqrt(std::max(radicand, 0.0));
  return sphere;
}

}  // namespace eclipsehash
