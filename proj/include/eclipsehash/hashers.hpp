#pragma once

// The four hash families compared by the toolkit:
//
//   LH  linear hyperplanes in V        bit k = [n_k . x > 0]
//   AH  affine hyperplanes in V        bit k = [n_k . x + b_k > 0]
//   HS  hyperspheres in V              bit k = [|x - p_k|^2 < r_k^2]
//   EH  Eclipse hashing                bit k = [n~_k . (f^-1(x; d) - C) > 0]
//
// EH maps x onto the unit sphere S in R^(N+1) and cuts S with hyperplanes
// that all pass through the common point C (|C| <= 1). Each such cut is a
// hypersphere (or hyperplane) in V, and because the cuts share a point inside
// S every code region is connected.

#include <cstddef>
#include <string_view>
#include <variant>

#include "eclipsehash/core.hpp"
#include "eclipsehash/projection.hpp"

namespace eclipsehash {

enum class Method { kLH, kAH, kHS, kEH };

std::string_view method_name(Method m);
/// Accepts "lh", "ah", "hs", "eh" (case-insensitive).
Method parse_method(std::string_view name);

struct LinearHyperplaneFamily {
  Matrix normals;  // B x N
};

struct AffineHyperplaneFamily {
  Matrix normals;  // B x N
  Vector offsets;  // B
};

struct HypersphereFamily {
  Matrix centers;  // B x N
  Vector radii;    // B, all > 0
};

struct EclipseFamily {
  Matrix normals;       // B x (N+1)
  Vector common_point;  // N+1, |C| <= 1
  double d = 1.0;
};

using Family =
    std::variant<LinearHyperplaneFamily, AffineHyperplaneFamily, HypersphereFamily, EclipseFamily>;

Method method_of(const Family& f);
std::size_t input_dim(const Family& f);
std::size_t code_bits(const Family& f);

/// Throws ParameterError or DimensionError when a family invariant is broken.
void validate(const Family& f);

// Sampling. All four families draw their B x N Gaussian block from the same
// stream of `seed`, so LH normals, AH normals, HS centers and the first N
// columns of the EH normals coincide for equal (N, B, seed).

LinearHyperplaneFamily sample_lh(std::size_t dim, std::size_t bits, Seed seed);
/// Offsets ~ Uniform[0, 1).
AffineHyperplaneFamily sample_ah(std::size_t dim, std::size_t bits, Seed seed);
/// Centers ~ N(0, I); radius_k = sqrt(N) |z_k|, z_k ~ N(0, 1), zero radii redrawn.
HypersphereFamily sample_hs(std::size_t dim, std::size_t bits, Seed seed);
/// Normals ~ N(0, I_{N+1}); C = (0, ..., 0, c). Requires c in [-1, 1] and d > 0.
EclipseFamily sample_eh(std::size_t dim, std::size_t bits, double c, double d, Seed seed);

/// Reuses sampled EH normals with a new (c, d).
EclipseFamily make_eclipse_family(Matrix normals, double c, double d);

Family sample_family(Method m, std::size_t dim, std::size_t bits, Seed seed, double c = 0.0,
                     double d = 1.0);

BitCode hash(const LinearHyperplaneFamily& f, FeatureView x);
BitCode hash(const AffineHyperplaneFamily& f, FeatureView x);
BitCode hash(const HypersphereFamily& f, FeatureView x);
BitCode hash(const EclipseFamily& f, FeatureView x);
BitCode hash(const Family& f, FeatureView x);

/// Hashes every row of `data`. Output order follows input order and is
/// bit-identical to per-vector hash() for any thread count.
CodeSet batch_hash(const LinearHyperplaneFamily& f, const Matrix& data, unsigned threads = 1);
CodeSet batch_hash(const AffineHyperplaneFamily& f, const Matrix& data, unsigned threads = 1);
CodeSet batch_hash(const HypersphereFamily& f, const Matrix& data, unsigned threads = 1);
CodeSet batch_hash(const EclipseFamily& f, const Matrix& data, unsigned threads = 1);
CodeSet batch_hash(const Family& f, const Matrix& data, unsigned threads = 1);

/// Shape in V cut out by EH row k, with b~ = -n~_k . C.
/// `outside_is_one` tells whether the region containing infinity gets bit 1:
/// for a hypersphere, bit k = outside_is_one XOR [|x - p| < rho].
struct EclipseRowGeometry {
  InducedShape shape;
  bool outside_is_one = false;
};

EclipseRowGeometry eclipse_row_geometry(const EclipseFamily& f, std::size_t row);

}  // namespace eclipsehash
