#include "eclipsehash/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <type_traits>
#include <variant>
#include <string>
#include <unordered_set>

#include "parallel.hpp"

namespace eclipsehash {

// ---------------------------------------------------------------------------
// Recall
// ---------------------------------------------------------------------------

double recall_single(const NeighborList& truth, const NeighborList& approx, std::size_t k) {
  if (k == 0) throw ParameterError("recall: k must be at least 1");
  if (truth.k != k || approx.k != k) {
    throw ParameterError("recall: neighbor lists built with k=" + std::to_string(truth.k) + " and " +
                         std::to_string(approx.k) + ", expected " + std::to_string(k));
  }
  std::vector<std::size_t> a = truth.ids;
  std::vector<std::size_t> b = approx.ids;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / static_cast<double>(k);
}

std::size_t default_k(std::size_t record_count) {
  return std::max<std::size_t>(1, (record_count + 99) / 100);
}

double mean_recall(std::span<const NeighborList> truth, const CodeSet& record_codes,
                   const CodeSet& query_codes, std::size_t k, unsigned threads) {
  if (truth.size() != query_codes.size()) {
    throw DimensionError("mean_recall: " + std::to_string(truth.size()) + " truth lists for " +
                         std::to_string(query_codes.size()) + " queries");
  }
  if (truth.empty()) throw EmptyInputError("mean_recall: no queries");
  std::vector<double> per_query(truth.size());
  detail::parallel_for(truth.size(), threads, [&](std::size_t q) {
    per_query[q] = recall_single(truth[q], knn_hamming(record_codes, query_codes[q], k), k);
  });
  // Fixed summation order regardless of thread count.
  const double total = std::accumulate(per_query.begin(), per_query.end(), 0.0);
  return total / static_cast<double>(per_query.size());
}

RecallEvaluator::RecallEvaluator(const Dataset& dataset, std::size_t k, unsigned threads)
    : dataset_(dataset), k_(k), threads_(threads) {
  dataset_.validate();
  if (dataset_.record_count() == 0) throw EmptyInputError("recall: dataset has no records");
  if (dataset_.query_count() == 0) throw EmptyInputError("recall: dataset has no queries");
  truth_ = knn_l2_all(dataset_.records, dataset_.queries, k_, threads_);
}

double RecallEvaluator::evaluate_codes(const CodeSet& record_codes,
                                       const CodeSet& query_codes) const {
  return mean_recall(truth_, record_codes, query_codes, k_, threads_);
}

double RecallEvaluator::evaluate(const Family& family) const {
  return evaluate_codes(batch_hash(family, dataset_.records, threads_),
                        batch_hash(family, dataset_.queries, threads_));
}

namespace {

RecallResult make_result(const Family& family, std::size_t k, Seed seed, double recall) {
  RecallResult r;
  r.method = method_of(family);
  r.bits = code_bits(family);
  r.k = k;
  r.seed = seed;
  r.mean_recall = recall;
  if (const auto* eh = std::get_if<EclipseFamily>(&family)) {
    r.c = eh->common_point[eh->common_point.size() - 1];
    r.d = eh->d;
  }
  return r;
}

}  // namespace

RecallResult mean_recall(const Dataset& dataset, const Family& family, std::size_t k, Seed seed,
                         unsigned threads) {
  const RecallEvaluator evaluator(dataset, k, threads);
  return make_result(family, k, seed, evaluator.evaluate(family));
}

// ---------------------------------------------------------------------------
// Ratio(d) and d_*
// ---------------------------------------------------------------------------

namespace {

std::vector<double> record_squared_norms(const Dataset& dataset) {
  std::vector<double> out(dataset.record_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = squared_norm(row_view(dataset.records, static_cast<Eigen::Index>(i)));
  }
  return out;
}

void require_grid(std::span<const double> grid) {
  if (grid.empty()) throw ParameterError("d grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
      throw ParameterError("d grid values must be positive and finite");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ParameterError("d grid must be strictly increasing");
    }
  }
}

}  // namespace

std::vector<double> record_norms(const Dataset& dataset) {
  std::vector<double> out = record_squared_norms(dataset);
  for (double& v : out) v = std::sqrt(v);
  return out;
}

double median_norm(const Dataset& dataset) {
  std::vector<double> norms = record_norms(dataset);
  if (norms.empty()) throw EmptyInputError("median_norm: no records");
  const std::size_t mid = norms.size() / 2;
  std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(mid), norms.end());
  if (norms.size() % 2 == 1) return norms[mid];
  const double upper = norms[mid];
  const double lower = *std::max_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double ratio(const Dataset& dataset, double d) {
  if (!(d > 0.0)) throw ParameterError("ratio: d must be positive");
  if (dataset.record_count() == 0) return 0.0;
  const double d2 = d * d;
  const std::vector<double> sq = record_squared_norms(dataset);
  const auto below = std::count_if(sq.begin(), sq.end(), [d2](double r2) { return r2 < d2; });
  return static_cast<double>(below) / static_cast<double>(sq.size());
}

DStar d_star(const Dataset& dataset, std::span<const double> d_grid) {
  require_grid(d_grid);
  const std::size_t n = dataset.record_count();
  if (n == 0) throw EmptyInputError("d_star: no records");
  std::vector<double> sq = record_squared_norms(dataset);
  std::sort(sq.begin(), sq.end());

  // ratio(d) > 0.99  <=>  100 * #{|x| < d} > 99 n  <=>  #{|x| < d} >= floor(99 n / 100) + 1
  const std::size_t needed = (99 * n) / 100 + 1;
  DStar out;
  out.value = std::sqrt(sq[needed - 1]);

  const auto hit = std::find_if(d_grid.begin(), d_grid.end(), [&](double d) {
    const auto below = std::lower_bound(sq.begin(), sq.end(), d * d) - sq.begin();
    return 100 * static_cast<std::size_t>(below) > 99 * n;
  });
  if (hit == d_grid.end()) {
    throw ParameterError("d_star: Ratio(d) never exceeds 0.99 on the given grid (max d " +
                         std::to_string(d_grid.back()) + ")");
  }
  out.grid_point = *hit;
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::vector<double> log_space(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw ParameterError("log_space needs 0 < lo < hi and at least 2 points");
  }
  std::vector<double> out(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = lo * std::exp(step * static_cast<double>(i));
  }
  out.back() = hi;
  return out;
}

void SweepGrid::validate() const {
  if (c_values.empty()) throw ParameterError("sweep grid has no c values");
  for (double c : c_values) {
    if (!(c >= -1.0 && c <= 1.0)) throw ParameterError("sweep grid c values must lie in [-1, 1]");
  }
  require_grid(d_values);
}

SweepGrid SweepGrid::defaults(const Dataset& dataset) {
  SweepGrid grid;
  for (int i = -4; i <= 4; ++i) grid.c_values.push_back(0.25 * i);
  const double median = median_norm(dataset);
  if (!(median > 0.0)) throw ParameterError("default sweep grid needs a positive median norm");
  grid.d_values = log_space(1e-2 * median, 1e2 * median, 25);
  return grid;
}

SweepResult sweep(const RecallEvaluator& evaluator, const SweepGrid& grid, std::size_t bits,
                  Seed seed, std::span<const Method> baselines) {
  grid.validate();
  const Dataset& dataset = evaluator.dataset();
  const std::size_t dim = dataset.dim();
  const std::size_t k = evaluator.k();
  SweepResult out;

  for (Method m : baselines) {
    if (m == Method::kEH) continue;
    const Family family = sample_family(m, dim, bits, seed);
    out.baselines.push_back(make_result(family, k, seed, evaluator.evaluate(family)));
  }

  const EclipseFamily sampled =
      sample_eh(dim, bits, grid.c_values.front(), grid.d_values.front(), seed);
  bool first = true;
  for (double c : grid.c_values) {
    for (double d : grid.d_values) {
      const Family family = make_eclipse_family(sampled.normals, c, d);
      const double recall = evaluator.evaluate(family);
      out.eclipse.push_back(make_result(family, k, seed, recall));
      if (first || recall > out.best_recall) {
        out.best_recall = recall;
        out.c_opt = c;
        out.d_opt = d;
        first = false;
      }
    }
  }
  return out;
}

SweepResult sweep(const Dataset& dataset, const SweepGrid& grid, std::size_t bits, std::size_t k,
                  Seed seed, std::span<const Method> baselines, unsigned threads) {
  grid.validate();
  const RecallEvaluator evaluator(dataset, k, threads);
  return sweep(evaluator, grid, bits, seed, baselines);
}

// ---------------------------------------------------------------------------
// Timing
// ---------------------------------------------------------------------------

TimingResult bench_hash(const Family& family, const Matrix& data, std::size_t repeats) {
  if (repeats < 3) throw ParameterError("bench_hash needs at least 3 repeats");
  if (data.rows() == 0) throw EmptyInputError("bench_hash: no vectors");
  using Clock = std::chrono::steady_clock;

  batch_hash(family, data, 1);  // warm-up
  std::vector<double> samples;
  samples.reserve(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = Clock::now();
    const CodeSet codes = batch_hash(family, data, 1);
    const auto stop = Clock::now();
    samples.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(samples.begin(), samples.end());
  const double median = samples.size() % 2 == 1
                            ? samples[samples.size() / 2]
                            : 0.5 * (samples[samples.size() / 2 - 1] + samples[samples.size() / 2]);

  TimingResult t;
  t.method = method_of(family);
  t.bits = code_bits(family);
  t.dim = input_dim(family);
  t.vectors = static_cast<std::size_t>(data.rows());
  // Clock resolution floor; a pass can never take zero time.
  t.elapsed = std::max(median, 1e-9);
  t.per_vector = t.elapsed / static_cast<double>(t.vectors);
  return t;
}

// ---------------------------------------------------------------------------
// Connectivity
// ---------------------------------------------------------------------------

std::size_t ConnectivityReport::max_components() const {
  std::size_t best = 0;
  for (const auto& [code, count] : components) best = std::max(best, count);
  return best;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

std::string code_string(CodeView code) {
  std::string s(code.nbits, '0');
  for (std::size_t i = 0; i < code.nbits; ++i) {
    if (code.bit(i)) s[i] = '1';
  }
  return s;
}

// Region boundaries of a family as spheres (|x - center|^2 = r^2) and planes
// (normal . x + offset = 0) in V.
struct Boundary {
  bool is_sphere = false;
  Vector point;  // sphere center or plane normal
  double value = 0.0;  // squared radius or plane offset
};

std::vector<Boundary> boundaries(const Family& family) {
  std::vector<Boundary> out;
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, LinearHyperplaneFamily>) {
          for (Eigen::Index k = 0; k < f.normals.rows(); ++k) {
            out.push_back({false, f.normals.row(k).transpose(), 0.0});
          }
        } else if constexpr (std::is_same_v<T, AffineHyperplaneFamily>) {
          for (Eigen::Index k = 0; k < f.normals.rows(); ++k) {
            out.push_back({false, f.normals.row(k).transpose(), f.offsets[k]});
          }
        } else if constexpr (std::is_same_v<T, HypersphereFamily>) {
          for (Eigen::Index k = 0; k < f.centers.rows(); ++k) {
            out.push_back({true, f.centers.row(k).transpose(), f.radii[k] * f.radii[k]});
          }
        } else {
          for (Eigen::Index k = 0; k < f.normals.rows(); ++k) {
            const auto g = eclipse_row_geometry(f, static_cast<std::size_t>(k));
            if (const auto* s = std::get_if<Hypersphere>(&g.shape)) {
              out.push_back({true, s->center, s->radius * s->radius});
            } else {
              const auto& plane = std::get<AffinePlane>(g.shape);
              out.push_back({false, plane.normal, plane.offset});
            }
          }
        }
      },
      family);
  return out;
}

/// Whether the segment a-b crosses a boundary. a and b must share a code, so
/// they lie on the same side of every boundary: a plane is never crossed, and
/// a sphere only when both ends are outside and the segment dips inside.
bool segment_crosses(const std::vector<Boundary>& bounds, const double* a, const double* b,
                     std::size_t n) {
  for (const Boundary& bd : bounds) {
    if (!bd.is_sphere) continue;
    double uu = 0.0;
    double au = 0.0;
    double aa = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = b[i] - a[i];
      const double ac = a[i] - bd.point[static_cast<Eigen::Index>(i)];
      uu += u * u;
      au += ac * u;
      aa += ac * ac;
    }
    if (aa < bd.value || uu == 0.0) continue;  // inside at both ends, or a point
    const double t = -au / uu;
    if (t <= 0.0 || t >= 1.0) continue;
    if (aa - au * au / uu <= bd.value) return true;
  }
  return false;
}

/// Same-code cells i, j in the window `lo`..`hi` (cell indices per axis)
/// that a finer raster of the window shows to be connected. Returns pairs
/// (i, j) with i = `from`.
std::vector<std::size_t> connected_in_refined_window(const Family& family, const Box& box,
                                                     std::size_t resolution, std::size_t from,
                                                     CodeView code,
                                                     const std::vector<std::ptrdiff_t>& lo,
                                                     const std::vector<std::ptrdiff_t>& hi,
                                                     std::size_t factor) {
  const std::size_t n = lo.size();
  std::vector<std::size_t> extent(n);
  std::size_t fine_cells = 1;
  for (std::size_t a = 0; a < n; ++a) {
    extent[a] = static_cast<std::size_t>(hi[a] - lo[a] + 1) * factor;
    fine_cells *= extent[a];
  }
  Matrix fine(static_cast<Eigen::Index>(fine_cells), static_cast<Eigen::Index>(n));
  for (std::size_t f = 0; f < fine_cells; ++f) {
    std::size_t rest = f;
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t i = rest % extent[a];
      rest /= extent[a];
      const double step = (box.hi[a] - box.lo[a]) / static_cast<double>(resolution);
      fine(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(a)) =
          box.lo[a] + (static_cast<double>(lo[a]) +
                       (static_cast<double>(i) + 0.5) / static_cast<double>(factor)) * step;
    }
  }
  const CodeSet fine_codes = batch_hash(family, fine);
  std::vector<char> member(fine_cells);
  for (std::size_t f = 0; f < fine_cells; ++f) {
    member[f] = std::equal(code.words.begin(), code.words.end(), fine_codes[f].words.begin());
  }
  DisjointSets fine_sets(fine_cells);
  std::size_t stride = 1;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t f = 0; f < fine_cells; ++f) {
      const std::size_t i = (f / stride) % extent[a];
      if (i + 1 < extent[a] && member[f] && member[f + stride]) fine_sets.unite(f, f + stride);
    }
    stride *= extent[a];
  }

  // With an odd factor the center of a coarse cell is the center of a fine cell.
  auto fine_of_coarse = [&](std::size_t cell) {
    std::size_t rest = cell;
    std::size_t f = 0;
    std::size_t scale = 1;
    for (std::size_t a = 0; a < n; ++a) {
      const auto i = static_cast<std::ptrdiff_t>(rest % resolution);
      rest /= resolution;
      f += (static_cast<std::size_t>(i - lo[a]) * factor + factor / 2) * scale;
      scale *= extent[a];
    }
    return f;
  };
  const std::size_t root = fine_sets.find(fine_of_coarse(from));

  std::vector<std::size_t> joined;
  std::vector<std::ptrdiff_t> idx(lo);
  for (;;) {
    std::size_t cell = 0;
    for (std::size_t a = n; a-- > 0;) cell = cell * resolution + static_cast<std::size_t>(idx[a]);
    const std::size_t f = fine_of_coarse(cell);
    if (cell != from && member[f] && fine_sets.find(f) == root) joined.push_back(cell);
    std::size_t a = 0;
    while (a < n && idx[a] == hi[a]) {
      idx[a] = lo[a];
      ++a;
    }
    if (a == n) break;
    ++idx[a];
  }
  return joined;
}

/// Sampling only cell centers leaves gaps where a region tapers below the
/// cell size, e.g. toward a point where two boundaries cross, or where it is
/// a sliver between two nearly equal spheres. For every frontier cell of a
/// code's smaller pieces, same-code cells within the bridge radius are joined
/// when the segment between the centers crosses no boundary, or else when a
/// finer raster of the surrounding window connects them.
/// Returns false when no code is split any more.
bool bridge_gaps(const Family& family, const Box& box, std::size_t resolution,
                 const CodeSet& codes, const Matrix& centers, DisjointSets& sets,
                 std::size_t radius) {
  const std::size_t n = static_cast<std::size_t>(centers.cols());
  const std::size_t cells = codes.size();
  auto same_code = [&](std::size_t a, std::size_t b) {
    return std::equal(codes[a].words.begin(), codes[a].words.end(), codes[b].words.begin());
  };

  std::map<std::string, std::map<std::size_t, std::size_t>> sizes;
  std::vector<std::string> names(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    names[cell] = code_string(codes[cell]);
    ++sizes[names[cell]][sets.find(cell)];
  }
  std::map<std::string, std::size_t> largest;
  for (const auto& [name, pieces] : sizes) {
    if (pieces.size() < 2) continue;
    largest[name] = std::max_element(pieces.begin(), pieces.end(), [](const auto& x, const auto& y) {
                      return x.second < y.second;
                    })->first;
  }
  if (largest.empty()) return false;

  const auto bounds = boundaries(family);
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const auto res = static_cast<std::ptrdiff_t>(resolution);
  // Keep a refined window near 512 fine cells per axis in 2-D, 64 in 3-D.
  const std::size_t axis_budget = n == 1 ? 4096 : n == 2 ? 512 : 64;
  std::size_t factor = std::max<std::size_t>(1, axis_budget / static_cast<std::size_t>(2 * r + 1));
  factor = std::min<std::size_t>(factor, 9);
  if (factor % 2 == 0) --factor;

  std::vector<std::ptrdiff_t> idx(n);
  std::vector<std::ptrdiff_t> lo(n);
  std::vector<std::ptrdiff_t> hi(n);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const auto top = largest.find(names[cell]);
    if (top == largest.end()) continue;
    std::size_t rest = cell;
    bool frontier = false;
    std::size_t stride = 1;
    for (std::size_t a = 0; a < n; ++a) {
      idx[a] = static_cast<std::ptrdiff_t>(rest % resolution);
      rest /= resolution;
      if (idx[a] > 0 && !same_code(cell, cell - stride)) frontier = true;
      if (idx[a] + 1 < res && !same_code(cell, cell + stride)) frontier = true;
      lo[a] = std::max<std::ptrdiff_t>(0, idx[a] - r);
      hi[a] = std::min<std::ptrdiff_t>(res - 1, idx[a] + r);
      stride *= resolution;
    }
    if (!frontier || sets.find(cell) == sets.find(top->second)) continue;

    bool unresolved = false;
    std::vector<std::ptrdiff_t> j(lo);
    for (;;) {
      std::size_t other = 0;
      for (std::size_t a = n; a-- > 0;) other = other * resolution + static_cast<std::size_t>(j[a]);
      if (same_code(cell, other) && sets.find(cell) != sets.find(other)) {
        if (!segment_crosses(bounds, centers.data() + cell * n, centers.data() + other * n, n)) {
          sets.unite(cell, other);
        } else {
          unresolved = true;
        }
      }
      std::size_t a = 0;
      while (a < n && j[a] == hi[a]) {
        j[a] = lo[a];
        ++a;
      }
      if (a == n) break;
      ++j[a];
    }
    if (unresolved && factor > 1) {
      for (std::size_t other :
           connected_in_refined_window(family, box, resolution, cell, codes[cell], lo, hi, factor)) {
        sets.unite(cell, other);
      }
    }
  }
  return true;
}

Box pad_box(Box box, double margin) {
  for (std::size_t i = 0; i < box.lo.size(); ++i) {
    const double extent = box.hi[i] - box.lo[i];
    box.lo[i] -= margin * extent;
    box.hi[i] += margin * extent;
  }
  return box;
}

void grow_box(Box& box, const Hypersphere& sphere) {
  const std::size_t n = static_cast<std::size_t>(sphere.center.size());
  if (box.lo.empty()) {
    box.lo.assign(n, std::numeric_limits<double>::infinity());
    box.hi.assign(n, -std::numeric_limits<double>::infinity());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double c = sphere.center[static_cast<Eigen::Index>(i)];
    box.lo[i] = std::min(box.lo[i], c - sphere.radius);
    box.hi[i] = std::max(box.hi[i], c + sphere.radius);
  }
}

}  // namespace

ConnectivityReport connectivity_check(const Family& family, const Box& box,
                                      std::size_t resolution, ConnectivityOptions options) {
  const std::size_t n = input_dim(family);
  if (n < 1 || n > 3) {
    throw UnsupportedDimensionError("connectivity_check supports N in {1, 2, 3}, got N=" +
                                    std::to_string(n));
  }
  if (resolution < 64) throw ParameterError("connectivity_check needs resolution >= 64");
  if (box.lo.size() != n || box.hi.size() != n) {
    throw DimensionError("connectivity_check: box must have " + std::to_string(n) + " axes");
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (!(box.hi[a] > box.lo[a]) || !std::isfinite(box.lo[a]) || !std::isfinite(box.hi[a])) {
      throw ParameterError("connectivity_check: box must satisfy lo < hi on every axis");
    }
  }

  std::size_t cells = 1;
  for (std::size_t a = 0; a < n; ++a) cells *= resolution;

  // Cell index = i_0 + resolution * (i_1 + resolution * i_2).
  Matrix centers(static_cast<Eigen::Index>(cells), static_cast<Eigen::Index>(n));
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::size_t rest = cell;
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t idx = rest % resolution;
      rest /= resolution;
      const double step = (box.hi[a] - box.lo[a]) / static_cast<double>(resolution);
      centers(static_cast<Eigen::Index>(cell), static_cast<Eigen::Index>(a)) =
          box.lo[a] + (static_cast<double>(idx) + 0.5) * step;
    }
  }
  const CodeSet codes = batch_hash(family, centers);

  auto same_code = [&](std::size_t a, std::size_t b) {
    const CodeView ca = codes[a];
    const CodeView cb = codes[b];
    return std::equal(ca.words.begin(), ca.words.end(), cb.words.begin());
  };

  DisjointSets sets(cells);
  std::size_t stride = 1;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const std::size_t idx = (cell / stride) % resolution;
      if (idx + 1 < resolution && same_code(cell, cell + stride)) sets.unite(cell, cell + stride);
    }
    stride *= resolution;
  }

  if (options.join_through_infinity) {
    std::map<std::string, std::size_t> boundary_anchor;
    for (std::size_t cell = 0; cell < cells; ++cell) {
      bool on_boundary = false;
      std::size_t rest = cell;
      for (std::size_t a = 0; a < n; ++a) {
        const std::size_t idx = rest % resolution;
        rest /= resolution;
        on_boundary = on_boundary || idx == 0 || idx + 1 == resolution;
      }
      if (!on_boundary) continue;
      const auto [it, inserted] = boundary_anchor.emplace(code_string(codes[cell]), cell);
      if (!inserted) sets.unite(cell, it->second);
    }
  }

  // Widen the search while some code is still split, up to 8x the radius.
  for (std::size_t radius = options.bridge_radius; radius > 0 && radius <= 8 * options.bridge_radius;
       radius *= 2) {
    if (!bridge_gaps(family, box, resolution, codes, centers, sets, radius)) break;
  }

  ConnectivityReport report;
  report.cells = cells;
  std::map<std::string, std::unordered_set<std::size_t>> roots;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    roots[code_string(codes[cell])].insert(sets.find(cell));
  }
  for (const auto& [code, set] : roots) report.components[code] = set.size();
  return report;
}

Box enclosing_box(const HypersphereFamily& family, double margin) {
  Box box;
  for (Eigen::Index k = 0; k < family.centers.rows(); ++k) {
    grow_box(box, Hypersphere{family.centers.row(k).transpose(), family.radii[k]});
  }
  if (box.lo.empty()) throw EmptyInputError("enclosing_box: family has no spheres");
  return pad_box(std::move(box), margin);
}

Box enclosing_box(const EclipseFamily& family, double margin) {
  Box box;
  for (Eigen::Index k = 0; k < family.normals.rows(); ++k) {
    const EclipseRowGeometry g = eclipse_row_geometry(family, static_cast<std::size_t>(k));
    const auto* sphere = std::get_if<Hypersphere>(&g.shape);
    if (!sphere) {
      throw ParameterError("enclosing_box: EH row " + std::to_string(k) +
                           " induces a hyperplane, which no box contains");
    }
    grow_box(box, *sphere);
  }
  if (box.lo.empty()) throw EmptyInputError("enclosing_box: family has no rows");
  return pad_box(std::move(box), margin);
}

}  // namespace eclipsehash
