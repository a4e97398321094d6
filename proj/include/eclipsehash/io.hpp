#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eclipsehash/core.hpp"
#include "eclipsehash/hashers.hpp"

namespace eclipsehash {

/// Malformed input file. `location` is a byte offset for binary formats and a
/// 1-based line number for CSV.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t location)
      : Error(what), location_(location) {}
  std::uint64_t location() const { return location_; }

 private:
  std::uint64_t location_;
};

/// Could not open, read or write a file.
class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

inline constexpr std::size_t kSyntheticDim = 512;
inline constexpr std::size_t kSyntheticRecords = 10'000;
inline constexpr std::size_t kSyntheticQueries = 1'000;

/// Standard normal records and queries, each half from its own stream of `seed`.
Dataset gen_synthetic(std::size_t dim = kSyntheticDim, std::size_t n_records = kSyntheticRecords,
                      std::size_t n_queries = kSyntheticQueries, Seed seed = {});

/// Subtracts the record mean from records and queries alike.
Dataset center_dataset(Dataset ds);

struct IdxData {
  Matrix vectors;                             // one flattened image per row, values in [0, 255]
  std::optional<std::vector<std::uint8_t>> labels;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// MNIST-style idx files (big-endian header). Labels are optional and must
/// match the image count.
IdxData load_idx(const std::filesystem::path& images,
                 const std::optional<std::filesystem::path>& labels = std::nullopt);

/// Concatenated records of (int32 dim, dim x float32), little-endian.
Matrix load_fvecs(const std::filesystem::path& path);
void save_fvecs(const std::filesystem::path& path, const Matrix& vectors);

/// One vector per line, comma separated. A first line whose first field is
/// not a number is taken as a header.
Matrix load_csv(const std::filesystem::path& path);

/// Dispatches on content: idx magic, then extension (.fvecs, .csv).
Matrix load_vectors(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Families
//
// One JSON header line (terminated by '\n') followed by a little-endian
// float64 blob, matrices row-major:
//   lh: normals (B x N)
//   ah: normals (B x N), offsets (B)
//   hs: centers (B x N), radii (B)
//   eh: normals (B x (N+1)), common point (N+1)
// ---------------------------------------------------------------------------

inline constexpr int kFamilyFormatVersion = 1;

struct FamilyFile {
  Family family;
  Seed seed;
};

void save_family(const std::filesystem::path& path, const Family& family, Seed seed);
FamilyFile load_family(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Codes
//
// Raw little-endian uint64 words, ceil(B / 64) per code, plus a JSON sidecar
// at "<path>.json" holding B, count, method and any family parameters.
// ---------------------------------------------------------------------------

struct CodesMeta {
  Method method = Method::kLH;
  std::size_t bits = 0;
  std::size_t count = 0;
  std::optional<double> c;
  std::optional<double> d;
  std::optional<std::uint64_t> seed;
};

std::filesystem::path sidecar_path(const std::filesystem::path& codes);

void save_codes(const std::filesystem::path& path, const CodeSet& codes, const CodesMeta& meta);
CodeSet load_codes(const std::filesystem::path& path, CodesMeta* meta = nullptr);

}  // namespace eclipsehash
