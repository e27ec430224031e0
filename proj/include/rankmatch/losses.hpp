#pragma once

#include <functional>
#include <vector>

#include "rankmatch/core.hpp"
#include "rankmatch/rng.hpp"

namespace rankmatch {

/// One ordered label pair whose source degrees differ by more than the
/// threshold. `hi`/`lo` name the indices ordered by the source distribution
/// (hi carries the larger degree); `gap` is that degree difference.
struct PairIndicator {
  std::size_t hi = 0;
  std::size_t lo = 0;
  double gap = 0.0;
};

/// h_j = exp(z_j - max z) / sum_q exp(z_q - max z). Strictly positive and
/// shift-invariant; sums to 1 within 1e-12.
LabelDistribution softmax_normalize(std::span<const double> logits);

/// Mean over samples of KL(truth_i || pred_i). Predictions are floored at
/// 1e-12 inside the log and 0*ln(0) contributes nothing.
double supervised_kl_loss(const std::vector<LabelDistribution>& preds_weak,
                          const std::vector<LabelDistribution>& truths);

/// Mean over samples of KL(pld_u || pred_u). Empty lists give 0 (no
/// unlabeled batch).
double consistency_loss(const std::vector<LabelDistribution>& plds,
                        const std::vector<LabelDistribution>& preds_strong);

/// Averages the predictions over k_weak weakly augmented views of x. The
/// result is a training target only: callers must treat it as a constant
/// (gradients never flow through it).
LabelDistribution build_pld(
    const std::function<LabelDistribution(const FeatureVector&)>& predict,
    const FeatureVector& x, int k_weak,
    const std::function<FeatureVector(const FeatureVector&, Rng&)>& weak_augment,
    Rng& rng);

/// All unordered pairs of `source` whose degree gap strictly exceeds t,
/// each reported once with the larger-degree index first.
std::vector<PairIndicator> significant_pairs(const LabelDistribution& source, double t);

/// Hinge sum over significant pairs of the truth: each pair demands the
/// prediction reproduce the ground-truth gap as a margin,
/// max(0, gap - (h_hi - h_lo)).
double prr_labeled_loss(const LabelDistribution& pred, const LabelDistribution& truth,
                        double t);

/// Zero-margin variant over significant pairs of the pseudo target: only the
/// ranking direction is enforced, max(0, -(h_hi - h_lo)).
double prr_unlabeled_loss(const LabelDistribution& pred_strong, const LabelDistribution& pld,
                          double t);

/// total = l_s + l_uc + lambda * (l_prr_l + l_prr_u). Terms more negative
/// than -1e-12 are rejected; tiny negative rounding noise is clamped to 0.
LossBreakdown total_loss(double l_s, double l_uc, double l_prr_l, double l_prr_u,
                         double lambda);

}  // namespace rankmatch
