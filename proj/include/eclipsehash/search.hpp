#pragma once

// Exact L2 k-nearest neighbors Z(q, k) and Hamming-space k-nearest neighbors
// W(q, k). Both rank by (distance, record index), so ties at the k-th place
// always go to the smaller index.

#include <cstddef>
#include <vector>

#include "eclipsehash/core.hpp"

namespace eclipsehash {

struct NeighborList {
  std::vector<std::size_t> ids;  // ascending (distance, index)
  std::size_t k = 0;

  friend bool operator==(const NeighborList&, const NeighborList&) = default;
};

/// Selection strategy for knn_hamming. kAuto uses counting-select over the
/// B+1 possible distances once there are at least 10^4 codes, a bounded
/// partial sort below that.
enum class HammingSelect { kAuto, kPartialSort, kCounting };

inline constexpr std::size_t kCountingSelectThreshold = 10'000;

NeighborList knn_l2(const Matrix& records, FeatureView query, std::size_t k);

NeighborList knn_hamming(const CodeSet& codes, CodeView query, std::size_t k,
                         HammingSelect select = HammingSelect::kAuto);

/// Z(q, k) for every query row; queries run in parallel, results are in query order.
std::vector<NeighborList> knn_l2_all(const Matrix& records, const Matrix& queries, std::size_t k,
                                     unsigned threads = 1);

std::vector<NeighborList> knn_hamming_all(const CodeSet& records, const CodeSet& queries,
                                          std::size_t k, unsigned threads = 1);

}  // namespace eclipsehash
