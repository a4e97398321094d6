#include "eclipsehash/search.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <utility>

#include "parallel.hpp"

namespace eclipsehash {

namespace {

void require_k(std::size_t k) {
  if (k == 0) throw ParameterError("k must be at least 1");
}

template <class Dist>
NeighborList select_smallest(std::vector<std::pair<Dist, std::size_t>>& scored, std::size_t k) {
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end());
  NeighborList out;
  out.k = k;
  out.ids.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.ids.push_back(scored[i].second);
  return out;
}

std::size_t popcount_distance(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  std::size_t count = 0;
  for (std::size_t w = 0; w < words; ++w) {
    count += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
  }
  return count;
}

NeighborList counting_select(const std::vector<std::uint32_t>& dist, std::size_t nbits,
                             std::size_t k) {
  std::vector<std::size_t> histogram(nbits + 1, 0);
  for (std::uint32_t d : dist) ++histogram[d];

  const std::size_t take = std::min(k, dist.size());
  // Radius at which the k-th neighbor sits, and how many of the ties there we keep.
  std::size_t radius = 0;
  std::size_t below = 0;
  while (below + histogram[radius] < take) {
    below += histogram[radius];
    ++radius;
  }
  std::size_t ties_left = take - below;

  // Bucket the survivors by distance, each bucket in index order.
  std::vector<std::size_t> start(radius + 2, 0);
  for (std::size_t r = 0; r < radius; ++r) start[r + 1] = start[r] + histogram[r];
  start[radius + 1] = start[radius] + ties_left;

  NeighborList out;
  out.k = k;
  out.ids.resize(take);
  std::vector<std::size_t> cursor(start.begin(), start.end() - 1);
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const std::size_t d = dist[i];
    if (d < radius) {
      out.ids[cursor[d]++] = i;
    } else if (d == radius && ties_left > 0) {
      out.ids[cursor[d]++] = i;
      --ties_left;
    }
  }
  return out;
}

}  // namespace

NeighborList knn_l2(const Matrix& records, FeatureView query, std::size_t k) {
  require_k(k);
  if (records.rows() == 0) throw EmptyInputError("knn_l2: no records");
  if (static_cast<std::size_t>(records.cols()) != query.size()) {
    throw DimensionError("knn_l2: query has dimension " + std::to_string(query.size()) +
                         ", records have " + std::to_string(records.cols()));
  }
  std::vector<std::pair<double, std::size_t>> scored(static_cast<std::size_t>(records.rows()));
  for (Eigen::Index i = 0; i < records.rows(); ++i) {
    scored[static_cast<std::size_t>(i)] = {squared_l2(row_view(records, i), query),
                                           static_cast<std::size_t>(i)};
  }
  return select_smallest(scored, k);
}

NeighborList knn_hamming(const CodeSet& codes, CodeView query, std::size_t k,
                         HammingSelect select) {
  require_k(k);
  if (codes.empty()) throw EmptyInputError("knn_hamming: no codes");
  if (codes.nbits() != query.nbits || query.words.size() != codes.words_per_code()) {
    throw DimensionError("knn_hamming: query has " + std::to_string(query.nbits) +
                         " bits, codes have " + std::to_string(codes.nbits()));
  }
  const std::size_t n = codes.size();
  const std::size_t words = codes.words_per_code();
  const std::uint64_t* base = codes.data().data();
  const std::uint64_t* q = query.words.data();

  if (select == HammingSelect::kAuto) {
    select = n >= kCountingSelectThreshold ? HammingSelect::kCounting : HammingSelect::kPartialSort;
  }
  if (select == HammingSelect::kCounting) {
    std::vector<std::uint32_t> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = static_cast<std::uint32_t>(popcount_distance(base + i * words, q, words));
    }
    return counting_select(dist, codes.nbits(), k);
  }
  std::vector<std::pair<std::size_t, std::size_t>> scored(n);
  for (std::size_t i = 0; i < n; ++i) {
    scored[i] = {popcount_distance(base + i * words, q, words), i};
  }
  return select_smallest(scored, k);
}

std::vector<NeighborList> knn_l2_all(const Matrix& records, const Matrix& queries, std::size_t k,
                                     unsigned threads) {
  std::vector<NeighborList> out(static_cast<std::size_t>(queries.rows()));
  detail::parallel_for(out.size(), threads, [&](std::size_t q) {
    out[q] = knn_l2(records, row_view(queries, static_cast<Eigen::Index>(q)), k);
  });
  return out;
}

std::vector<NeighborList> knn_hamming_all(const CodeSet& records, const CodeSet& queries,
                                          std::size_t k, unsigned threads) {
  std::vector<NeighborList> out(queries.size());
  detail::parallel_for(out.size(), threads,
                       [&](std::size_t q) { out[q] = knn_hamming(records, queries[q], k); });
  return out;
}

}  // namespace eclipsehash
