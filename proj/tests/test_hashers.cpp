#include <gtest/gtest.h>

#include <cmath>
#include <variant>

#include "eclipsehash/hashers.hpp"
#include "eclipsehash/projection.hpp"
#include "support.hpp"

namespace eclipsehash {
namespace {

using testing::Gen;

Matrix rows(std::initializer_list<std::initializer_list<double>> init) {
  Matrix m(static_cast<Eigen::Index>(init.size()), static_cast<Eigen::Index>(init.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : init) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

bool bit0(const Family& f, const Vector& x) { return hash(f, as_view(x)).bit(0); }

TEST(MethodNames, RoundTripAndCaseInsensitive) {
  for (Method m : {Method::kLH, Method::kAH, Method::kHS, Method::kEH}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_EQ(parse_method("EH"), Method::kEH);
  EXPECT_THROW(parse_method("sh"), ParameterError);
}

TEST(HashLH, StrictInequalityAtTheOrigin) {
  const Family f = sample_lh(5, 64, Seed{1});
  const BitCode code = hash(f, as_view(Vector::Zero(5)));
  for (std::size_t k = 0; k < 64; ++k) EXPECT_FALSE(code.bit(k));
}

TEST(HashLH, HandExamples) {
  const Family f = LinearHyperplaneFamily{rows({{1.0, 0.0}})};
  EXPECT_TRUE(bit0(f, vec({3.0, -7.0})));
  EXPECT_FALSE(bit0(f, vec({-3.0, 7.0})));
}

TEST(HashAH, HandExample) {
  // 0.4 + 0.4 - 1 < 0.
  const Family f = AffineHyperplaneFamily{rows({{1.0, 1.0}}), vec({-1.0})};
  EXPECT_FALSE(bit0(f, vec({0.4, 0.4})));
  EXPECT_TRUE(bit0(f, vec({0.6, 0.6})));
}

TEST(HashHS, InsideOutsideAndBoundary) {
  const Family f = HypersphereFamily{rows({{0.0, 0.0}}), vec({1.0})};
  EXPECT_TRUE(bit0(f, vec({0.5, 0.0})));
  EXPECT_FALSE(bit0(f, vec({2.0, 0.0})));
  EXPECT_FALSE(bit0(f, vec({1.0, 0.0})));
}

TEST(HashEH, HandEvaluatedPoints) {
  // f^-1(0) = (0, -1) and f^-1(2) = (0.8, 0.6) for d = 1; the normal (0, 1) reads the last entry.
  const Family f = make_eclipse_family(rows({{0.0, 1.0}}), 0.0, 1.0);
  EXPECT_FALSE(bit0(f, vec({0.0})));
  EXPECT_TRUE(bit0(f, vec({2.0})));
  // On the equator the dot product is exactly zero: bit 0.
  EXPECT_FALSE(bit0(f, vec({1.0})));
}

TEST(SampleLH, ShapeDeterminismAndMoments) {
  const auto a = sample_lh(2, 3, Seed{9});
  EXPECT_EQ(a.normals.rows(), 3);
  EXPECT_EQ(a.normals.cols(), 2);
  EXPECT_EQ(sample_lh(2, 3, Seed{9}).normals, a.normals);
  EXPECT_NE(sample_lh(2, 3, Seed{10}).normals, a.normals);

  const auto big = sample_lh(100, 1000, Seed{4});
  const double mean = big.normals.mean();
  const double var = (big.normals.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.03);
}

TEST(SampleAH, OffsetsUniformOnUnitInterval) {
  const auto f = sample_ah(1, 100000, Seed{3});
  EXPECT_EQ(f.offsets.size(), 100000);
  EXPECT_GE(f.offsets.minCoeff(), 0.0);
  EXPECT_LE(f.offsets.maxCoeff(), 1.0);
  EXPECT_GE(f.offsets.mean(), 0.497);
  EXPECT_LE(f.offsets.mean(), 0.503);
}

TEST(SampleHS, RadiiFollowScaledHalfNormal) {
  const std::size_t n = 4;
  const auto f = sample_hs(n, 100000, Seed{8});
  EXPECT_GT(f.radii.minCoeff(), 0.0);
  const double expected = std::sqrt(static_cast<double>(n)) * std::sqrt(2.0 / M_PI);
  EXPECT_NEAR(f.radii.mean(), expected, 0.01 * expected);
  EXPECT_NEAR(f.centers.mean(), 0.0, 0.02);
}

TEST(SampleEH, CommonPointAndShape) {
  const auto f = sample_eh(6, 10, 0.0, 2.0, Seed{1});
  EXPECT_EQ(f.normals.rows(), 10);
  EXPECT_EQ(f.normals.cols(), 7);
  EXPECT_EQ(f.common_point, Vector::Zero(7));
  EXPECT_EQ(sample_eh(6, 10, -0.5, 2.0, Seed{1}).common_point[6], -0.5);
  EXPECT_THROW(sample_eh(6, 10, 1.5, 2.0, Seed{1}), ParameterError);
  EXPECT_THROW(sample_eh(6, 10, 0.0, 0.0, Seed{1}), ParameterError);
}

TEST(Sampling, FamiliesShareOneGaussianBlock) {
  const Seed seed{77};
  const auto lh = sample_lh(12, 40, seed);
  const auto ah = sample_ah(12, 40, seed);
  const auto hs = sample_hs(12, 40, seed);
  const auto eh = sample_eh(12, 40, 0.3, 5.0, seed);
  EXPECT_EQ(ah.normals, lh.normals);
  EXPECT_EQ(hs.centers, lh.normals);
  EXPECT_EQ(Matrix(eh.normals.leftCols(12)), lh.normals);
}

TEST(Validate, RejectsBrokenFamilies) {
  EXPECT_THROW(validate(LinearHyperplaneFamily{rows({{0.0, 0.0}})}), ParameterError);
  EXPECT_THROW(validate(HypersphereFamily{rows({{0.0, 0.0}}), vec({0.0})}), ParameterError);
  EXPECT_THROW(validate(AffineHyperplaneFamily{rows({{1.0, 0.0}}), vec({1.0, 2.0})}),
               DimensionError);
  EXPECT_THROW(make_eclipse_family(rows({{1.0, 0.0}}), 0.0, -1.0), ParameterError);
}

TEST(Hash, DimensionMismatchThrows) {
  const Family f = sample_lh(3, 8, Seed{1});
  EXPECT_THROW(hash(f, as_view(Vector::Zero(4))), DimensionError);
  EXPECT_THROW(batch_hash(f, Matrix::Zero(2, 4)), DimensionError);
}

TEST(BatchHash, EmptyAndSingletonInputs) {
  const Family f = sample_eh(3, 70, 0.1, 1.0, Seed{2});
  EXPECT_EQ(batch_hash(f, Matrix(0, 3)).size(), 0U);
  const Matrix one = Matrix::Constant(1, 3, 0.25);
  EXPECT_EQ(batch_hash(f, one).code(0), hash(f, row_view(one, 0)));
}

class BatchMatchesLoop : public ::testing::TestWithParam<Method> {};

TEST_P(BatchMatchesLoop, BitForBitForAnyThreadCount) {
  Gen g(31);
  for (std::size_t bits : {1U, 63U, 64U, 65U, 300U}) {
    const std::size_t n = 1 + g.index(40);
    const Family f = sample_family(GetParam(), n, bits, Seed{bits}, -0.2, 1.5);
    const Matrix data = g.normal_matrix(100, n);
    const CodeSet one = batch_hash(f, data, 1);
    const CodeSet three = batch_hash(f, data, 3);
    ASSERT_EQ(one, three);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      ASSERT_EQ(one.code(static_cast<std::size_t>(i)), hash(f, row_view(data, i)));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllMethods, BatchMatchesLoop,
                         ::testing::Values(Method::kLH, Method::kAH, Method::kHS, Method::kEH),
                         [](const auto& info) { return std::string(method_name(info.param)); });

TEST(BatchHash, PointsOnHyperplanesAgreeWithSingleHash) {
  // Rows orthogonal to the normal give an exact zero dot product.
  const Family f = LinearHyperplaneFamily{rows({{1.0, 1.0}, {3.0, -2.0}})};
  const Matrix data = rows({{1.0, -1.0}, {2.0, 3.0}, {-4.0, 4.0}});
  const CodeSet codes = batch_hash(f, data);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    EXPECT_EQ(codes.code(static_cast<std::size_t>(i)), hash(f, row_view(data, i)));
  }
  EXPECT_FALSE(codes[0].bit(0));
  EXPECT_FALSE(codes[1].bit(1));
}

TEST(HashLH, InvariantUnderPositiveScaling) {
  Gen g(37);
  const Family f = sample_lh(16, 128, Seed{5});
  for (int trial = 0; trial < 200; ++trial) {
    const Vector x = g.normal_vector(16);
    const double alpha = std::exp(g.uniform(-8.0, 8.0));
    const Vector y = alpha * x;
    ASSERT_EQ(hash(f, as_view(x)), hash(f, as_view(y)));
  }
}

// Each EH row equals a hypersphere indicator up to a constant per-row flip,
// fixed by which side of the ambient plane the north pole is on.
TEST(HashEH, EachRowIsAHypersphereBitUpToAFixedFlip) {
  Gen g(41);
  int rows_checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + g.index(6);
    const double c = g.uniform(-0.95, 0.95);
    const double d = std::exp(g.uniform(-1.5, 1.5));
    const EclipseFamily f = sample_eh(n, 1, c, d, Seed{static_cast<std::uint64_t>(trial)});
    const Vector normal = f.normals.row(0).transpose();
    const double offset = -normal.dot(f.common_point);
    const auto shape = induced_shape({normal, offset}, d);
    const auto* sphere = std::get_if<Hypersphere>(&shape);
    ASSERT_NE(sphere, nullptr);
    Vector north = Vector::Zero(static_cast<Eigen::Index>(n + 1));
    north[static_cast<Eigen::Index>(n)] = 1.0;
    const bool flip = normal.dot(north - f.common_point) > 0.0;

    for (int i = 0; i < 1000; ++i) {
      const Vector dir = g.normal_vector(n).normalized();
      const double t = g.uniform(0.0, 2.0);
      const Vector x = sphere->center + t * sphere->radius * dir;
      const double gap = std::abs((x - sphere->center).norm() - sphere->radius);
      if (gap < 1e-9 * (1.0 + sphere->radius)) continue;
      const bool inside = (x - sphere->center).norm() < sphere->radius;
      ASSERT_EQ(hash(f, as_view(x)).bit(0), flip != inside) << "trial " << trial << " point " << i;
    }
    ++rows_checked;
  }
  EXPECT_EQ(rows_checked, 100);
}

TEST(HashEH, RowsThroughTheNorthPoleCutAlongAPlane) {
  // With C at the north pole every ambient plane passes through it.
  Gen g(43);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + g.index(5);
    const double d = std::exp(g.uniform(-1.0, 1.0));
    const EclipseFamily f = sample_eh(n, 8, 1.0, d, Seed{static_cast<std::uint64_t>(100 + trial)});
    for (Eigen::Index k = 0; k < 8; ++k) {
      const Vector normal = f.normals.row(k).transpose();
      const auto shape = induced_shape({normal, -normal.dot(f.common_point)}, d);
      const auto* plane = std::get_if<AffinePlane>(&shape);
      ASSERT_NE(plane, nullptr);
      for (int i = 0; i < 200; ++i) {
        const Vector x = g.normal_vector(n, 2.0 * d);
        const double side = plane->normal.dot(x) + plane->offset;
        if (std::abs(side) < 1e-9) continue;
        ASSERT_EQ(hash(f, as_view(x)).bit(static_cast<std::size_t>(k)), side > 0.0);
      }
    }
  }
}

TEST(EclipseRowGeometry, AgreesWithHashing) {
  Gen g(47);
  const EclipseFamily f = sample_eh(3, 32, 0.4, 2.0, Seed{6});
  for (std::size_t k = 0; k < 32; ++k) {
    const auto geo = eclipse_row_geometry(f, k);
    const auto& s = std::get<Hypersphere>(geo.shape);
    for (int i = 0; i < 100; ++i) {
      const Vector x = s.center + g.normal_vector(3, s.radius);
      const bool inside = (x - s.center).squaredNorm() < s.radius * s.radius;
      ASSERT_EQ(hash(f, as_view(x)).bit(k), geo.outside_is_one != inside);
    }
  }
}

}  // namespace
}  // namespace eclipsehash
