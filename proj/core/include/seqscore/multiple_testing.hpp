#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace seqscore {

/// Sequential p-values for m comparisons at one stopping time.
/// Labels default to "0", "1", ... when left empty.
struct ComparisonBatch {
  std::vector<double> p_values;
  double alpha = 0.05;
  std::vector<std::string> labels;

  void validate() const;
  std::string label(std::size_t i) const;
};

struct Rejections {
  /// Indices into the batch, ordered by increasing p-value (label breaks ties).
  std::vector<std::size_t> indices;
  std::vector<std::string> labels;
  /// Largest p-value threshold that was met, 0 when nothing was rejected.
  double threshold = 0.0;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

/// 1 + 1/2 + ... + 1/m.
double harmonic_number(std::size_t m);

/// Rejects exactly the comparisons with p <= alpha / m.
Rejections bonferroni(const ComparisonBatch& batch);

/// Step-up under arbitrary dependence: with p-values sorted increasingly,
/// rejects (1)..(j) for the largest j with p_(j) <= alpha j / (m H_m).
Rejections bh_correlated(const ComparisonBatch& batch);

}  // namespace seqscore
