#include "eclipsehash/core.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace eclipsehash {

void Dataset::validate() const {
  if (records.cols() < 1) {
    throw DimensionError("dataset '" + name + "' has dimension 0");
  }
  if (queries.size() > 0 && queries.cols() != records.cols()) {
    throw DimensionError("dataset '" + name + "': records have dimension " +
                         std::to_string(records.cols()) + " but queries have " +
                         std::to_string(queries.cols()));
  }
  if (!records.allFinite() || !queries.allFinite()) {
    throw ParameterError("dataset '" + name + "' contains NaN or Inf entries");
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(Seed seed, Stream stream)
    : engine_(splitmix64(seed.value ^ splitmix64(static_cast<std::uint64_t>(stream)))) {}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u = 0.0;
  double v = 0.0;
  double s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

Matrix sample_standard_normal_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) {
    throw ParameterError("normal matrix needs rows, cols >= 1");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  double* out = m.data();
  for (std::size_t i = 0; i < rows * cols; ++i) {
    out[i] = rng.normal();
  }
  return m;
}

BitCode BitCode::from_words(std::vector<std::uint64_t> words, std::size_t nbits) {
  if (words.size() != words_for_bits(nbits)) {
    throw DimensionError("code of " + std::to_string(nbits) + " bits needs " +
                         std::to_string(words_for_bits(nbits)) + " words, got " +
                         std::to_string(words.size()));
  }
  if (nbits % kWordBits != 0 && !words.empty()) {
    const std::uint64_t padding = ~((std::uint64_t{1} << (nbits % kWordBits)) - 1);
    if (words.back() & padding) {
      throw ParameterError("code has nonzero padding bits");
    }
  }
  BitCode code;
  code.words_ = std::move(words);
  code.nbits_ = nbits;
  return code;
}

void BitCode::set(std::size_t i, bool value) {
  const std::uint64_t mask = std::uint64_t{1} << (i % kWordBits);
  if (value) {
    words_[i / kWordBits] |= mask;
  } else {
    words_[i / kWordBits] &= ~mask;
  }
}

BitCode pack_bits(std::span<const std::uint8_t> bits) {
  BitCode code(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) {
      throw ParameterError("pack_bits: element " + std::to_string(i) + " is not 0 or 1");
    }
    if (bits[i]) code.set(i, true);
  }
  return code;
}

std::vector<std::uint8_t> unpack_bits(CodeView code) {
  std::vector<std::uint8_t> bits(code.nbits);
  for (std::size_t i = 0; i < code.nbits; ++i) {
    bits[i] = code.bit(i) ? 1 : 0;
  }
  return bits;
}

BitCode CodeSet::code(std::size_t i) const {
  const CodeView v = (*this)[i];
  return BitCode::from_words({v.words.begin(), v.words.end()}, nbits_);
}

void CodeSet::push_back(CodeView code) {
  if (count_ == 0 && data_.empty() && stride_ == 0) {
    nbits_ = code.nbits;
    stride_ = words_for_bits(nbits_);
  }
  if (code.nbits != nbits_) {
    throw DimensionError("code set holds " + std::to_string(nbits_) + "-bit codes, got " +
                         std::to_string(code.nbits));
  }
  data_.insert(data_.end(), code.words.begin(), code.words.end());
  ++count_;
}

double squared_l2(FeatureView a, FeatureView b) {
  if (a.size() != b.size()) {
    throw DimensionError("squared_l2: lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
  const std::size_t n = a.size();
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double diff = a[i + j] - b[i + j];
      acc[j] += diff * diff;
    }
  }
  for (; i < n; ++i) {
    const double diff = a[i] - b[i];
    acc[0] += diff * diff;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

namespace {

void require_same_length(CodeView a, CodeView b) {
  if (a.nbits != b.nbits || a.words.size() != b.words.size()) {
    throw DimensionError("incomparable codes: " + std::to_string(a.nbits) + " vs " +
                         std::to_string(b.nbits) + " bits");
  }
}

}  // namespace

std::size_t hamming_distance(CodeView a, CodeView b) {
  require_same_length(a, b);
  std::size_t count = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w) {
    count += static_cast<std::size_t>(std::popcount(a.words[w] ^ b.words[w]));
  }
  return count;
}

double spherical_hamming_distance(CodeView a, CodeView b) {
  require_same_length(a, b);
  std::size_t xor_count = 0;
  std::size_t and_count = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w) {
    xor_count += static_cast<std::size_t>(std::popcount(a.words[w] ^ b.words[w]));
    and_count += static_cast<std::size_t>(std::popcount(a.words[w] & b.words[w]));
  }
  if (and_count == 0) {
    if (xor_count == 0) {
      throw IndeterminateError("spherical-Hamming distance is 0/0 for two all-zero codes");
    }
    throw DivisionByZeroError("spherical-Hamming distance divides by zero: codes share no 1-bit");
  }
  return static_cast<double>(xor_count) / static_cast<double>(and_count);
}

}  // namespace eclipsehash
