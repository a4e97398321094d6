#pragma once

// Shared helpers for the unit tests: small random generators driven by the
// library's own seeded streams, and scratch directories.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "eclipsehash/core.hpp"

namespace eclipsehash::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(Seed{seed}, Stream::kAuxiliary) {}

  double uniform(double lo, double hi) { return lo + (hi - lo) * rng_.uniform(); }
  double normal() { return rng_.normal(); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(rng_.next_u64() % n); }
  bool coin() { return (rng_.next_u64() & 1U) != 0; }
  std::uint64_t word() { return rng_.next_u64(); }

  Vector normal_vector(std::size_t n, double scale = 1.0) {
    Vector v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = scale * normal();
    return v;
  }

  Matrix normal_matrix(std::size_t rows, std::size_t cols, double scale = 1.0) {
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * normal();
    return m;
  }

  std::vector<std::uint8_t> bits(std::size_t n) {
    std::vector<std::uint8_t> b(n);
    for (auto& x : b) x = coin() ? 1 : 0;
    return b;
  }

 private:
  Rng rng_;
};

/// Fresh empty directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("eclipsehash-" + tag + "-" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace eclipsehash::testing
