#include "codcl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace codcl {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error("metric inputs differ in length");
  }
  if (scores.empty()) throw Error("metric inputs are empty");
  for (double s : scores) {
    if (std::isnan(s)) throw Error("metric scores contain NaN");
  }
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error("labels must be 0 or 1");
    (y == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) {
    throw Error("metric requires both a positive and a negative label");
  }
}

}  // namespace

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  double positives_seen = 0.0;
  double precision_sum = 0.0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      positives_seen += 1.0;
      precision_sum += positives_seen / static_cast<double>(rank + 1);
    }
  }
  return precision_sum / positives_seen;
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Tied block [i, j) shares the average of its 1-based ranks.
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum_pos += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  const double p = static_cast<double>(n_pos);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

}  // namespace codcl
