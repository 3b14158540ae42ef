#pragma once

// Reachability graph over p-s pairs and greedy anchor selection.
//
// Node i has an edge to node j when tracking the segment from pair i to the
// problem of pair j ends at the solution of pair j. Greedy cover repeatedly
// takes the node that dominates the most nodes not covered yet. Running the
// greedy order to completion once gives every target fraction as a prefix.

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "hcpick/hash.hpp"
#include "hcpick/kinds.hpp"
#include "hcpick/parallel.hpp"
#include "hcpick/tracker.hpp"

namespace hcpick {

/// Dense row-major bit matrix.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_((cols + 63) / 64), bits_(rows * words_, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t words_per_row() const { return words_; }

  bool get(std::size_t r, std::size_t c) const { return (bits_[r * words_ + c / 64] >> (c % 64)) & 1u; }
  void set(std::size_t r, std::size_t c, bool v = true) {
    std::uint64_t& w = bits_[r * words_ + c / 64];
    const std::uint64_t m = std::uint64_t{1} << (c % 64);
    w = v ? (w | m) : (w & ~m);
  }
  const std::uint64_t* row(std::size_t r) const { return bits_.data() + r * words_; }
  std::size_t row_count(std::size_t r) const {
    std::size_t n = 0;
    for (std::size_t w = 0; w < words_; ++w) n += std::popcount(row(r)[w]);
    return n;
  }
  bool any_in_row(std::size_t r) const {
    for (std::size_t w = 0; w < words_; ++w)
      if (row(r)[w]) return true;
    return false;
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto w : bits_) n += std::popcount(w);
    return n;
  }
  bool operator==(const BitMatrix&) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0, words_ = 0;
  std::vector<std::uint64_t> bits_;
};

template <class K>
struct ReachabilityGraph {
  std::vector<PsPair<K>> nodes;
  BitMatrix adjacency;  // adjacency.get(i, j): track from i reaches j
  TrackSettings settings;

  std::size_t size() const { return nodes.size(); }
  bool edge(std::size_t i, std::size_t j) const { return adjacency.get(i, j); }
};

template <class K>
ReachabilityGraph<K> build_graph(const std::vector<PsPair<K>>& pairs, const TrackSettings& settings = {},
                                 int jobs = 1) {
  const std::size_t n = pairs.size();
  ReachabilityGraph<K> g{pairs, BitMatrix(n, n), settings};
  // One row per work item so workers never share a word.
  parallel_for(n, jobs, [&](std::size_t i) {
    g.adjacency.set(i, i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (reaches(track_segment<K>(pairs[i], pairs[j].problem, settings), pairs[j].solution, settings))
        g.adjacency.set(i, j);
    }
  });
  return g;
}

/// Full greedy order over the graph with the cumulative covered fraction after
/// each pick. Stops when everything is covered.
struct GreedyOrder {
  std::vector<int> nodes;
  std::vector<double> coverage;
};

template <class K>
GreedyOrder greedy_order(const ReachabilityGraph<K>& g) {
  const std::size_t n = g.size(), words = g.adjacency.words_per_row();
  GreedyOrder out;
  std::vector<std::uint64_t> uncovered(words, ~std::uint64_t{0});
  if (n % 64) uncovered[words - 1] = (std::uint64_t{1} << (n % 64)) - 1;
  std::size_t covered = 0;
  while (covered < n) {
    std::size_t best_gain = 0;
    int best = -1;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t gain = 0;
      const std::uint64_t* r = g.adjacency.row(i);
      for (std::size_t w = 0; w < words; ++w) gain += std::popcount(r[w] & uncovered[w]);
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;  // cannot happen with self-loops
    const std::uint64_t* r = g.adjacency.row(best);
    for (std::size_t w = 0; w < words; ++w) uncovered[w] &= ~r[w];
    covered += best_gain;
    out.nodes.push_back(best);
    out.coverage.push_back(double(covered) / double(n));
  }
  return out;
}

template <class K>
struct AnchorSet {
  std::vector<PsPair<K>> anchors;
  std::vector<int> node_index;  // position of each anchor in the source graph, -1 if unknown
  double coverage = 0.0;        // fraction of the source set dominated by the anchors
  std::string source;
  std::uint64_t settings_hash = 0;

  std::size_t size() const { return anchors.size(); }
};

/// Shortest greedy prefix whose coverage reaches target_fraction.
template <class K>
AnchorSet<K> anchors_from_order(const ReachabilityGraph<K>& g, const GreedyOrder& order, double target_fraction,
                                std::string source = {}) {
  AnchorSet<K> out;
  out.source = std::move(source);
  out.settings_hash = hcpick::settings_hash(g.settings);
  for (std::size_t k = 0; k < order.nodes.size(); ++k) {
    out.anchors.push_back(g.nodes[order.nodes[k]]);
    out.node_index.push_back(order.nodes[k]);
    out.coverage = order.coverage[k];
    if (out.coverage >= target_fraction) break;
  }
  return out;
}

template <class K>
AnchorSet<K> greedy_cover(const ReachabilityGraph<K>& g, double target_fraction, std::string source = {}) {
  return anchors_from_order(g, greedy_order(g), target_fraction, std::move(source));
}

/// labels.get(pair, anchor): tracking from that anchor solves that pair.
struct CoverageResult {
  double fraction = 0.0;
  BitMatrix labels;
};

template <class K>
CoverageResult coverage(const std::vector<PsPair<K>>& anchors, const std::vector<PsPair<K>>& pairs,
                        const TrackSettings& settings = {}, int jobs = 1) {
  CoverageResult out{0.0, BitMatrix(pairs.size(), anchors.size())};
  parallel_for(pairs.size(), jobs, [&](std::size_t i) {
    for (std::size_t a = 0; a < anchors.size(); ++a)
      if (reaches(track_segment<K>(anchors[a], pairs[i].problem, settings), pairs[i].solution, settings))
        out.labels.set(i, a);
  });
  std::size_t covered = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) covered += out.labels.any_in_row(i);
  out.fraction = pairs.empty() ? 0.0 : double(covered) / double(pairs.size());
  return out;
}

}  // namespace hcpick
