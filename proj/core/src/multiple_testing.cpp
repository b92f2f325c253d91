#include "seqscore/multiple_testing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seqscore/errors.hpp"

namespace seqscore {

void ComparisonBatch::validate() const {
  if (p_values.empty()) throw ConfigError("comparison batch needs at least one p-value");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!labels.empty() && labels.size() != p_values.size()) {
    throw ConfigError("labels and p-values differ in length");
  }
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("p-values must lie in [0, 1]");
  }
}

std::string ComparisonBatch::label(std::size_t i) const {
  return labels.empty() ? std::to_string(i) : labels[i];
}

double harmonic_number(std::size_t m) {
  double h = 0.0;
  for (std::size_t r = m; r >= 1; --r) h += 1.0 / static_cast<double>(r);
  return h;
}

namespace {

std::vector<std::size_t> sorted_order(const ComparisonBatch& batch) {
  std::vector<std::size_t> order(batch.p_values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (batch.p_values[a] != batch.p_values[b]) return batch.p_values[a] < batch.p_values[b];
    return batch.label(a) < batch.label(b);
  });
  return order;
}

Rejections take_prefix(const ComparisonBatch& batch, const std::vector<std::size_t>& order,
                       std::size_t count, double threshold) {
  Rejections out;
  out.threshold = count > 0 ? threshold : 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    out.indices.push_back(order[i]);
    out.labels.push_back(batch.label(order[i]));
  }
  return out;
}

}  // namespace

Rejections bonferroni(const ComparisonBatch& batch) {
  batch.validate();
  const auto order = sorted_order(batch);
  const double threshold = batch.alpha / static_cast<double>(order.size());
  std::size_t j = 0;
  while (j < order.size() && batch.p_values[order[j]] <= threshold) ++j;
  return take_prefix(batch, order, j, threshold);
}

Rejections bh_correlated(const ComparisonBatch& batch) {
  batch.validate();
  const auto order = sorted_order(batch);
  const double m = static_cast<double>(order.size());
  const double scale = batch.alpha / (m * harmonic_number(order.size()));
  std::size_t j = 0;
  double threshold = 0.0;
  for (std::size_t k = order.size(); k >= 1; --k) {
    const double t = scale * static_cast<double>(k);
    if (batch.p_values[order[k - 1]] <= t) {
      j = k;
      threshold = t;
      break;
    }
  }
  return take_prefix(batch, order, j, threshold);
}

}  // namespace seqscore
