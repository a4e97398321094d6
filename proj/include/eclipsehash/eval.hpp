#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eclipsehash/core.hpp"
#include "eclipsehash/hashers.hpp"
#include "eclipsehash/search.hpp"

namespace eclipsehash {

// ---------------------------------------------------------------------------
// Recall
// ---------------------------------------------------------------------------

struct RecallResult {
  Method method = Method::kLH;
  std::size_t bits = 0;
  std::size_t k = 0;
  std::optional<double> c;  // EH only
  std::optional<double> d;  // EH only
  double mean_recall = 0.0;
  Seed seed;
};

/// |ids(truth) & ids(approx)| / k. Throws ParameterError if either list was built with another k.
double recall_single(const NeighborList& truth, const NeighborList& approx, std::size_t k);

/// ceil(1% of the record count), at least 1.
std::size_t default_k(std::size_t record_count);

/// Mean of recall_single over all queries, given the exact neighbors of each query.
double mean_recall(std::span<const NeighborList> truth, const CodeSet& record_codes,
                   const CodeSet& query_codes, std::size_t k, unsigned threads = 1);

/// Holds the exact k-NN of every query so many families can be scored against
/// one dataset. Keeps a reference to `dataset`, which must outlive it.
class RecallEvaluator {
 public:
  RecallEvaluator(const Dataset& dataset, std::size_t k, unsigned threads = 1);

  double evaluate(const Family& family) const;
  double evaluate_codes(const CodeSet& record_codes, const CodeSet& query_codes) const;

  std::size_t k() const { return k_; }
  const std::vector<NeighborList>& truth() const { return truth_; }
  const Dataset& dataset() const { return dataset_; }

 private:
  const Dataset& dataset_;
  std::size_t k_;
  unsigned threads_;
  std::vector<NeighborList> truth_;
};

RecallResult mean_recall(const Dataset& dataset, const Family& family, std::size_t k, Seed seed,
                         unsigned threads = 1);

// ---------------------------------------------------------------------------
// Ratio(d) and d_*
// ---------------------------------------------------------------------------

/// Euclidean norms of the records, in record order.
std::vector<double> record_norms(const Dataset& dataset);
double median_norm(const Dataset& dataset);

/// Fraction of records with |x| < d, i.e. mapped strictly below the equator of S.
double ratio(const Dataset& dataset, double d);

struct DStar {
  double value = 0.0;       // infimum of {d : ratio(d) > 0.99}
  double grid_point = 0.0;  // smallest grid d with ratio(d) > 0.99
};

/// The infimum is the norm of rank floor(0.99 n) + 1 (1-based). Throws
/// ParameterError if no grid point pushes the ratio above 0.99.
DStar d_star(const Dataset& dataset, std::span<const double> d_grid);

// ---------------------------------------------------------------------------
// (c, d) sweeps
// ---------------------------------------------------------------------------

std::vector<double> log_space(double lo, double hi, std::size_t count);

struct SweepGrid {
  std::vector<double> c_values;
  std::vector<double> d_values;

  void validate() const;
  /// c in {-1, -0.75, ..., 1}; d log-spaced over [0.01, 100] x median norm, 25 points.
  static SweepGrid defaults(const Dataset& dataset);
};

struct SweepResult {
  std::vector<RecallResult> baselines;  // once per baseline method
  std::vector<RecallResult> eclipse;    // c-major, d-minor
  double c_opt = 0.0;
  double d_opt = 0.0;
  double best_recall = 0.0;
};

/// EH recall at every grid cell, reusing one set of sampled normals, plus
/// one row per baseline method. (c_opt, d_opt) is the first cell, in grid
/// order, reaching the maximum.
SweepResult sweep(const Dataset& dataset, const SweepGrid& grid, std::size_t bits, std::size_t k,
                  Seed seed, std::span<const Method> baselines, unsigned threads = 1);

/// Same, scoring against an existing evaluator.
SweepResult sweep(const RecallEvaluator& evaluator, const SweepGrid& grid, std::size_t bits,
                  Seed seed, std::span<const Method> baselines);

// ---------------------------------------------------------------------------
// Timing
// ---------------------------------------------------------------------------

struct TimingResult {
  Method method = Method::kLH;
  std::size_t bits = 0;
  std::size_t dim = 0;
  std::size_t vectors = 0;
  double elapsed = 0.0;     // seconds, median over repeats
  double per_vector = 0.0;  // seconds
};

/// Single-threaded wall-clock of batch_hash over `data`: one warm-up pass,
/// then the median of `repeats` (>= 3) timed passes.
TimingResult bench_hash(const Family& family, const Matrix& data, std::size_t repeats = 5);

// ---------------------------------------------------------------------------
// Connectivity of code regions
// ---------------------------------------------------------------------------

class UnsupportedDimensionError : public Error {
 public:
  using Error::Error;
};

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct ConnectivityOptions {
  /// Treat every cell on the box boundary as adjacent to the point at
  /// infinity, so boundary cells sharing a code belong to one component.
  /// Only meaningful when the box contains every region boundary; then the
  /// outside of the box is a single region, as on the compactified space.
  bool join_through_infinity = true;
  /// Cells of one code that are at most this many cells apart on every axis
  /// are also joined when the segment between their centers crosses no
  /// region boundary. Repairs sampling gaps in regions thinner than a cell
  /// without joining truly separate pieces. 0 keeps the plain neighborhood.
  std::size_t bridge_radius = 8;
};

struct ConnectivityReport {
  std::map<std::string, std::size_t> components;  // code ("0101", bit 0 first) -> count
  std::size_t cells = 0;

  std::size_t max_components() const;
  bool all_connected() const { return max_components() <= 1; }
};

/// Rasterizes `box` into resolution^N cells, hashes every cell center and
/// counts connected components (2N-neighborhood) per occurring code.
/// Requires N in {1, 2, 3} and resolution >= 64.
ConnectivityReport connectivity_check(const Family& family, const Box& box,
                                      std::size_t resolution, ConnectivityOptions options = {});

/// Smallest axis-aligned box containing every hypersphere of the family,
/// widened by `margin` times its extent. Throws if a row induces a hyperplane.
Box enclosing_box(const HypersphereFamily& family, double margin = 0.05);
Box enclosing_box(const EclipseFamily& family, double margin = 0.05);

}  // namespace eclipsehash
