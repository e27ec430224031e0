#pragma once

#include <vector>

#include "rankmatch/core.hpp"

namespace rankmatch {

// The six per-pair evaluation scores. Chebyshev, Clark, Canberra and KL are
// distances (lower is better); intersection and cosine are similarities
// (higher is better). Clark and Canberra treat a pair of exactly-zero
// coordinates as contributing nothing; KL floors the prediction at 1e-12 and
// reads 0*ln(0) as 0.

double chebyshev(const LabelDistribution& truth, const LabelDistribution& pred);
double clark(const LabelDistribution& truth, const LabelDistribution& pred);
double canberra(const LabelDistribution& truth, const LabelDistribution& pred);
double kl_divergence(const LabelDistribution& truth, const LabelDistribution& pred);
double intersection(const LabelDistribution& truth, const LabelDistribution& pred);
double cosine(const LabelDistribution& truth, const LabelDistribution& pred);

/// Unweighted mean of each per-pair score over equal-length lists,
/// accumulated in index order.
MetricsReport evaluate_all(const std::vector<LabelDistribution>& truths,
                           const std::vector<LabelDistribution>& preds);

}  // namespace rankmatch
