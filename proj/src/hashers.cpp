#include "eclipsehash/hashers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "parallel.hpp"

namespace eclipsehash {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kLH: return "lh";
    case Method::kAH: return "ah";
    case Method::kHS: return "hs";
    case Method::kEH: return "eh";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "lh") return Method::kLH;
  if (lower == "ah") return Method::kAH;
  if (lower == "hs") return Method::kHS;
  if (lower == "eh") return Method::kEH;
  throw ParameterError("unknown hash method '" + std::string(name) + "' (expected lh|ah|hs|eh)");
}

Method method_of(const Family& f) {
  return static_cast<Method>(f.index());
}

std::size_t input_dim(const Family& f) {
  return std::visit(
      [](const auto& fam) -> std::size_t {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, HypersphereFamily>) {
          return static_cast<std::size_t>(fam.centers.cols());
        } else if constexpr (std::is_same_v<T, EclipseFamily>) {
          return static_cast<std::size_t>(fam.normals.cols() - 1);
        } else {
          return static_cast<std::size_t>(fam.normals.cols());
        }
      },
      f);
}

std::size_t code_bits(const Family& f) {
  return std::visit(
      [](const auto& fam) -> std::size_t {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, HypersphereFamily>) {
          return static_cast<std::size_t>(fam.centers.rows());
        } else {
          return static_cast<std::size_t>(fam.normals.rows());
        }
      },
      f);
}

namespace {

void require_shape(std::size_t dim, std::size_t bits) {
  if (dim == 0 || bits == 0) {
    throw ParameterError("hash family needs N >= 1 and B >= 1");
  }
}

void require_nonzero_rows(const Matrix& m, std::string_view what) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw DimensionError(std::string(what) + " matrix is empty");
  }
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    if (m.row(k).squaredNorm() == 0.0) {
      throw ParameterError(std::string(what) + " row " + std::to_string(k) + " is zero");
    }
  }
  if (!m.allFinite()) {
    throw ParameterError(std::string(what) + " contains NaN or Inf");
  }
}

void require_c(double c) {
  if (!(c >= -1.0 && c <= 1.0)) {
    throw ParameterError("common intersection parameter c must lie in [-1, 1], got " +
                         std::to_string(c));
  }
}

void require_d(double d) {
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw ParameterError("projection parameter d must be positive, got " + std::to_string(d));
  }
}

void require_input(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw DimensionError("family expects " + std::to_string(expected) +
                         "-dimensional vectors, got " + std::to_string(got));
  }
}

}  // namespace

void validate(const Family& family) {
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearHyperplaneFamily>) {
          require_nonzero_rows(f.normals, "LH normal");
        } else if constexpr (std::is_same_v<T, AffineHyperplaneFamily>) {
          require_nonzero_rows(f.normals, "AH normal");
          if (f.offsets.size() != f.normals.rows()) {
            throw DimensionError("AH family needs one offset per normal");
          }
        } else if constexpr (std::is_same_v<T, HypersphereFamily>) {
          if (f.centers.rows() == 0 || f.centers.cols() == 0) {
            throw DimensionError("HS center matrix is empty");
          }
          if (f.radii.size() != f.centers.rows()) {
            throw DimensionError("HS family needs one radius per center");
          }
          if (!(f.radii.array() > 0.0).all() || !f.radii.allFinite()) {
            throw ParameterError("HS radii must be positive and finite");
          }
        } else {
          require_nonzero_rows(f.normals, "EH normal");
          if (f.normals.cols() < 2) {
            throw DimensionError("EH normals need N+1 >= 2 columns");
          }
          if (f.common_point.size() != f.normals.cols()) {
            throw DimensionError("EH common point must have length N+1");
          }
          if (f.common_point.norm() > 1.0 + 1e-12) {
            throw ParameterError("EH common point must lie inside or on the unit sphere");
          }
          require_d(f.d);
        }
      },
      family);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

LinearHyperplaneFamily sample_lh(std::size_t dim, std::size_t bits, Seed seed) {
  require_shape(dim, bits);
  Rng rng(seed, Stream::kNormals);
  return {sample_standard_normal_matrix(bits, dim, rng)};
}

AffineHyperplaneFamily sample_ah(std::size_t dim, std::size_t bits, Seed seed) {
  require_shape(dim, bits);
  AffineHyperplaneFamily f;
  Rng normals(seed, Stream::kNormals);
  f.normals = sample_standard_normal_matrix(bits, dim, normals);
  Rng offsets(seed, Stream::kOffsets);
  f.offsets.resize(static_cast<Eigen::Index>(bits));
  for (auto& b : f.offsets) b = offsets.uniform();
  return f;
}

HypersphereFamily sample_hs(std::size_t dim, std::size_t bits, Seed seed) {
  require_shape(dim, bits);
  HypersphereFamily f;
  Rng centers(seed, Stream::kNormals);
  f.centers = sample_standard_normal_matrix(bits, dim, centers);
  Rng radii(seed, Stream::kRadii);
  const double scale = std::sqrt(static_cast<double>(dim));
  f.radii.resize(static_cast<Eigen::Index>(bits));
  for (auto& r : f.radii) {
    do {
      r = scale * std::abs(radii.normal());
    } while (r == 0.0);
  }
  return f;
}

EclipseFamily make_eclipse_family(Matrix normals, double c, double d) {
  require_c(c);
  require_d(d);
  EclipseFamily f;
  f.common_point = Vector::Zero(normals.cols());
  if (normals.cols() > 0) f.common_point[normals.cols() - 1] = c;
  f.normals = std::move(normals);
  f.d = d;
  validate(f);
  return f;
}

EclipseFamily sample_eh(std::size_t dim, std::size_t bits, double c, double d, Seed seed) {
  require_shape(dim, bits);
  require_c(c);
  require_d(d);
  Rng shared(seed, Stream::kNormals);
  const Matrix head = sample_standard_normal_matrix(bits, dim, shared);
  Rng lift(seed, Stream::kLift);
  Matrix normals(static_cast<Eigen::Index>(bits), static_cast<Eigen::Index>(dim + 1));
  normals.leftCols(static_cast<Eigen::Index>(dim)) = head;
  for (Eigen::Index k = 0; k < normals.rows(); ++k) {
    normals(k, static_cast<Eigen::Index>(dim)) = lift.normal();
  }
  return make_eclipse_family(std::move(normals), c, d);
}

Family sample_family(Method m, std::size_t dim, std::size_t bits, Seed seed, double c, double d) {
  switch (m) {
    case Method::kLH: return sample_lh(dim, bits, seed);
    case Method::kAH: return sample_ah(dim, bits, seed);
    case Method::kHS: return sample_hs(dim, bits, seed);
    case Method::kEH: return sample_eh(dim, bits, c, d, seed);
  }
  throw ParameterError("unknown method");
}

// ---------------------------------------------------------------------------
// Hashing kernels
// ---------------------------------------------------------------------------

namespace {

constexpr Eigen::Index kChunkRows = 256;

/// Serial dot product with the offset added last; the reference value used
/// whenever the fast product lands inside its rounding-error band.
double canonical_affine(const double* w, const double* x, Eigen::Index n, double offset) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) sum += w[i] * x[i];
  return sum + offset;
}

/// Sets bit k of row m iff normals_k . inputs_m + offsets_k > 0.
///
/// The product runs through Eigen's blocked GEMM, whose summation order
/// depends on problem sizes. Any order satisfies
///   |computed - exact| <= (D+2) eps (|w| |x| + |b|) =: E,
/// so a value with |v| > 3E has the sign of the exact value, and so does the
/// serial recompute. Inside the band the serial value decides. The resulting
/// bit is therefore independent of batch size and chunking.
void threshold_block(const Matrix& inputs, const Matrix& normals, const Vector& normal_norms,
                     const Vector* offsets, CodeSet& out, std::size_t first_code) {
  const Eigen::Index rows = inputs.rows();
  const Eigen::Index bits = normals.rows();
  const Eigen::Index dim = normals.cols();
  const Matrix products = inputs * normals.transpose();
  const double band =
      3.0 * static_cast<double>(dim + 2) * std::numeric_limits<double>::epsilon();

  for (Eigen::Index m = 0; m < rows; ++m) {
    const double input_norm = inputs.row(m).norm();
    auto words = out.mutable_words(first_code + static_cast<std::size_t>(m));
    std::fill(words.begin(), words.end(), 0);
    for (Eigen::Index k = 0; k < bits; ++k) {
      const double b = offsets ? (*offsets)[k] : 0.0;
      double value = products(m, k) + b;
      const double tolerance = band * (normal_norms[k] * input_norm + std::abs(b));
      if (!(std::abs(value) > tolerance)) {
        value = canonical_affine(normals.row(k).data(), inputs.row(m).data(), dim, b);
      }
      if (value > 0.0) {
        words[static_cast<std::size_t>(k) / kWordBits] |= std::uint64_t{1}
                                                          << (static_cast<std::size_t>(k) % kWordBits);
      }
    }
  }
}

template <class Prepare>
CodeSet hyperplane_batch(const Matrix& normals, const Vector* offsets, Eigen::Index rows,
                         unsigned threads, Prepare&& prepare) {
  const std::size_t bits = static_cast<std::size_t>(normals.rows());
  CodeSet out(bits, static_cast<std::size_t>(rows));
  if (rows == 0) return out;
  const Vector norms = normals.rowwise().norm();
  const std::size_t chunks = static_cast<std::size_t>((rows + kChunkRows - 1) / kChunkRows);
  detail::parallel_for(chunks, threads, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunkRows;
    const Eigen::Index count = std::min(kChunkRows, rows - begin);
    const Matrix inputs = prepare(begin, count);
    threshold_block(inputs, normals, norms, offsets, out, static_cast<std::size_t>(begin));
  });
  return out;
}

void require_data(const Matrix& data, std::size_t dim) {
  if (data.rows() > 0) require_input(dim, static_cast<std::size_t>(data.cols()));
}

Matrix single_row(FeatureView x) {
  Matrix m(1, static_cast<Eigen::Index>(x.size()));
  std::copy(x.begin(), x.end(), m.data());
  return m;
}

}  // namespace

CodeSet batch_hash(const LinearHyperplaneFamily& f, const Matrix& data, unsigned threads) {
  require_data(data, static_cast<std::size_t>(f.normals.cols()));
  return hyperplane_batch(f.normals, nullptr, data.rows(), threads,
                          [&](Eigen::Index begin, Eigen::Index count) -> Matrix {
                            return data.middleRows(begin, count);
                          });
}

CodeSet batch_hash(const AffineHyperplaneFamily& f, const Matrix& data, unsigned threads) {
  require_data(data, static_cast<std::size_t>(f.normals.cols()));
  if (f.offsets.size() != f.normals.rows()) {
    throw DimensionError("AH family needs one offset per normal");
  }
  return hyperplane_batch(f.normals, &f.offsets, data.rows(), threads,
                          [&](Eigen::Index begin, Eigen::Index count) -> Matrix {
                            return data.middleRows(begin, count);
                          });
}

CodeSet batch_hash(const EclipseFamily& f, const Matrix& data, unsigned threads) {
  const Eigen::Index ambient = f.normals.cols();
  require_data(data, static_cast<std::size_t>(ambient - 1));
  if (f.common_point.size() != ambient) {
    throw DimensionError("EH common point must have length N+1");
  }
  require_d(f.d);
  return hyperplane_batch(
      f.normals, nullptr, data.rows(), threads,
      [&](Eigen::Index begin, Eigen::Index count) -> Matrix {
        Matrix lifted(count, ambient);
        for (Eigen::Index m = 0; m < count; ++m) {
          double* out = lifted.row(m).data();
          inverse_stereographic_into(row_view(data, begin + m), f.d,
                                     {out, static_cast<std::size_t>(ambient)});
          for (Eigen::Index i = 0; i < ambient; ++i) out[i] -= f.common_point[i];
        }
        return lifted;
      });
}

CodeSet batch_hash(const HypersphereFamily& f, const Matrix& data, unsigned threads) {
  const Eigen::Index dim = f.centers.cols();
  require_data(data, static_cast<std::size_t>(dim));
  if (f.radii.size() != f.centers.rows()) {
    throw DimensionError("HS family needs one radius per center");
  }
  const std::size_t bits = static_cast<std::size_t>(f.centers.rows());
  const Vector radii_sq = f.radii.array().square();
  CodeSet out(bits, static_cast<std::size_t>(data.rows()));
  const Eigen::Index rows = data.rows();
  const std::size_t chunks = static_cast<std::size_t>((rows + kChunkRows - 1) / kChunkRows);
  detail::parallel_for(chunks, threads, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kChunkRows;
    const Eigen::Index end = std::min(rows, begin + kChunkRows);
    for (Eigen::Index m = begin; m < end; ++m) {
      const FeatureView x = row_view(data, m);
      auto words = out.mutable_words(static_cast<std::size_t>(m));
      for (std::size_t k = 0; k < bits; ++k) {
        const double dist_sq = squared_l2(x, row_view(f.centers, static_cast<Eigen::Index>(k)));
        if (dist_sq < radii_sq[static_cast<Eigen::Index>(k)]) {
          words[k / kWordBits] |= std::uint64_t{1} << (k % kWordBits);
        }
      }
    }
  });
  return out;
}

CodeSet batch_hash(const Family& f, const Matrix& data, unsigned threads) {
  return std::visit([&](const auto& fam) { return batch_hash(fam, data, threads); }, f);
}

BitCode hash(const LinearHyperplaneFamily& f, FeatureView x) {
  require_input(static_cast<std::size_t>(f.normals.cols()), x.size());
  return batch_hash(f, single_row(x)).code(0);
}

BitCode hash(const AffineHyperplaneFamily& f, FeatureView x) {
  require_input(static_cast<std::size_t>(f.normals.cols()), x.size());
  return batch_hash(f, single_row(x)).code(0);
}

BitCode hash(const HypersphereFamily& f, FeatureView x) {
  require_input(static_cast<std::size_t>(f.centers.cols()), x.size());
  return batch_hash(f, single_row(x)).code(0);
}

BitCode hash(const EclipseFamily& f, FeatureView x) {
  require_input(static_cast<std::size_t>(f.normals.cols() - 1), x.size());
  return batch_hash(f, single_row(x)).code(0);
}

BitCode hash(const Family& f, FeatureView x) {
  return std::visit([&](const auto& fam) { return hash(fam, x); }, f);
}

EclipseRowGeometry eclipse_row_geometry(const EclipseFamily& f, std::size_t row) {
  if (row >= static_cast<std::size_t>(f.normals.rows())) {
    throw DimensionError("EH row index out of range");
  }
  const Vector normal = f.normals.row(static_cast<Eigen::Index>(row)).transpose();
  const double offset = -normal.dot(f.common_point);
  EclipseRowGeometry g{induced_shape({normal, offset}, f.d), false};
  // n~ . (north pole - C) = n~_{N+1} + b~
  g.outside_is_one = normal[normal.size() - 1] + offset > 0.0;
  return g;
}

}  // namespace eclipsehash
