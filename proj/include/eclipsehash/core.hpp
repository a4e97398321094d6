#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace eclipsehash {

/// Row-major dense storage; one feature vector per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Read-only view of one feature vector (x_1, ..., x_N).
using FeatureView = std::span<const double>;

inline FeatureView row_view(const Matrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline FeatureView as_view(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric parameter is outside its domain (d <= 0, c outside [-1, 1], ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Vector lengths or code lengths that must agree do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An operation that needs at least one element received none.
class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Spherical-Hamming distance with no shared 1-bits and a nonzero xor.
class DivisionByZeroError : public Error {
 public:
  using Error::Error;
};

/// Spherical-Hamming distance of two all-zero codes (0/0).
class IndeterminateError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct Dataset {
  std::string name;
  Matrix records;
  Matrix queries;

  std::size_t dim() const { return static_cast<std::size_t>(records.cols()); }
  std::size_t record_count() const { return static_cast<std::size_t>(records.rows()); }
  std::size_t query_count() const { return static_cast<std::size_t>(queries.rows()); }

  /// Throws unless both halves share one dimension >= 1 and every entry is finite.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Seeded randomness
//
// Every consumer draws from its own stream. A stream's engine is
// std::mt19937_64 seeded with splitmix64(seed ^ splitmix64(stream id)), so a
// new stream id never perturbs existing ones. Normals use the Marsaglia polar
// method on 53-bit uniforms; the pair's second value is cached and returned
// by the next call.
// ---------------------------------------------------------------------------

struct Seed {
  std::uint64_t value = 0;
  friend bool operator==(Seed, Seed) = default;
};

enum class Stream : std::uint64_t {
  kRecords = 1,
  kQueries = 2,
  kNormals = 3,   // B x N normals (LH, AH) and centers (HS); first N columns of EH
  kOffsets = 4,   // AH offsets
  kRadii = 5,     // HS radii
  kLift = 6,      // last column of EH normals
  kAuxiliary = 7, // tests and tools
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  Rng(Seed seed, Stream stream);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal draw.
  double normal();
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// rows x cols independent N(0,1) draws, consumed in row-major order.
Matrix sample_standard_normal_matrix(std::size_t rows, std::size_t cols, Rng& rng);

// ---------------------------------------------------------------------------
// Bit codes
//
// Bit i lives in word i / 64 at position i % 64. Bits at positions >= nbits
// are always zero, so whole-word popcounts need no masking.
// ---------------------------------------------------------------------------

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for_bits(std::size_t nbits) {
  return (nbits + kWordBits - 1) / kWordBits;
}

struct CodeView {
  std::span<const std::uint64_t> words;
  std::size_t nbits = 0;

  bool bit(std::size_t i) const { return (words[i / kWordBits] >> (i % kWordBits)) & 1U; }
};

class BitCode {
 public:
  BitCode() = default;
  explicit BitCode(std::size_t nbits) : words_(words_for_bits(nbits), 0), nbits_(nbits) {}

  /// Adopts `words`; throws if the count is wrong or a padding bit is set.
  static BitCode from_words(std::vector<std::uint64_t> words, std::size_t nbits);

  std::size_t nbits() const { return nbits_; }
  std::span<const std::uint64_t> words() const { return words_; }
  bool bit(std::size_t i) const { return view().bit(i); }
  void set(std::size_t i, bool value);

  CodeView view() const { return {words_, nbits_}; }
  operator CodeView() const { return view(); }  // NOLINT(google-explicit-constructor)

  friend bool operator==(const BitCode&, const BitCode&) = default;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t nbits_ = 0;
};

/// Packs a {0,1} sequence; element i becomes bit i. Other values throw ParameterError.
BitCode pack_bits(std::span<const std::uint8_t> bits);
std::vector<std::uint8_t> unpack_bits(CodeView code);

/// Equal-length codes stored contiguously, `words_per_code()` words each.
class CodeSet {
 public:
  CodeSet() = default;
  CodeSet(std::size_t nbits, std::size_t count)
      : nbits_(nbits), stride_(words_for_bits(nbits)), count_(count), data_(stride_ * count, 0) {}

  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t nbits() const { return nbits_; }
  std::size_t words_per_code() const { return stride_; }

  CodeView operator[](std::size_t i) const {
    return {std::span<const std::uint64_t>(data_).subspan(i * stride_, stride_), nbits_};
  }
  std::span<std::uint64_t> mutable_words(std::size_t i) {
    return std::span<std::uint64_t>(data_).subspan(i * stride_, stride_);
  }
  std::span<const std::uint64_t> data() const { return data_; }
  BitCode code(std::size_t i) const;
  void push_back(CodeView code);

  friend bool operator==(const CodeSet&, const CodeSet&) = default;

 private:
  std::size_t nbits_ = 0;
  std::size_t stride_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> data_;
};

/// Squared Euclidean distance, accumulated in a fixed order so every caller
/// gets the same rounding.
double squared_l2(FeatureView a, FeatureView b);

/// Number of differing positions. Throws DimensionError on length mismatch.
std::size_t hamming_distance(CodeView a, CodeView b);

/// |xor(a,b)| / |and(a,b)|. Throws DivisionByZeroError when the codes share no
/// 1-bit but differ, IndeterminateError when both are all zero.
double spherical_hamming_distance(CodeView a, CodeView b);

}  // namespace eclipsehash
