#pragma once

#include <span>

#include "codcl/types.hpp"

namespace codcl {

/// Average precision: scores sorted descending (stable, so ties keep input
/// order), precision summed at each positive rank, divided by the positive
/// count. Requires at least one label of each class.
double average_precision(std::span<const double> scores, std::span<const int> labels);

/// AUC-ROC via the rank statistic with midranks for tied scores. Requires at
/// least one label of each class.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

}  // namespace codcl
