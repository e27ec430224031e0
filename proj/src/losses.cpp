#include "rankmatch/losses.hpp"

#include <algorithm>
#include <cmath>

namespace rankmatch {

namespace {

constexpr double kKlFloor = 1e-12;

double kl_pair(const LabelDistribution& target, const LabelDistribution& pred) {
  if (target.size() != pred.size()) {
    throw Error(Err::DimensionMismatch,
                "KL over sizes " + std::to_string(target.size()) + " vs " +
                    std::to_string(pred.size()));
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    if (target[j] <= 0.0) continue;
    sum += target[j] * std::log(target[j] / std::max(pred[j], kKlFloor));
  }
  return sum;
}

}  // namespace

LabelDistribution softmax_normalize(std::span<const double> logits) {
  if (logits.size() < 2) {
    throw Error(Err::TooFewLabels, "softmax needs at least 2 logits");
  }
  double zmax = logits[0];
  for (const double z : logits) {
    if (!std::isfinite(z)) throw Error(Err::NonFiniteLogit, "logit is not finite");
    zmax = std::max(zmax, z);
  }
  std::vector<double> out(logits.size());
  double denom = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp(logits[j] - zmax);
    denom += out[j];
  }
  for (double& v : out) v /= denom;
  return LabelDistribution::validated(std::move(out));
}

double supervised_kl_loss(const std::vector<LabelDistribution>& preds_weak,
                          const std::vector<LabelDistribution>& truths) {
  if (preds_weak.size() != truths.size()) {
    throw Error(Err::LengthMismatch,
                std::to_string(preds_weak.size()) + " preds vs " +
                    std::to_string(truths.size()) + " truths");
  }
  if (preds_weak.empty()) {
    throw Error(Err::EmptyInput, "supervised loss needs a non-empty batch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    sum += kl_pair(truths[i], preds_weak[i]);
  }
  return sum / static_cast<double>(truths.size());
}

double consistency_loss(const std::vector<LabelDistribution>& plds,
                        const std::vector<LabelDistribution>& preds_strong) {
  if (plds.size() != preds_strong.size()) {
    throw Error(Err::LengthMismatch,
                std::to_string(plds.size()) + " plds vs " +
                    std::to_string(preds_strong.size()) + " preds");
  }
  if (plds.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t u = 0; u < plds.size(); ++u) {
    sum += kl_pair(plds[u], preds_strong[u]);
  }
  return sum / static_cast<double>(plds.size());
}

LabelDistribution build_pld(
    const std::function<LabelDistribution(const FeatureVector&)>& predict,
    const FeatureVector& x, int k_weak,
    const std::function<FeatureVector(const FeatureVector&, Rng&)>& weak_augment,
    Rng& rng) {
  if (k_weak < 1) throw Error(Err::ConfigInvalid, "k_weak must be >= 1");
  std::vector<std::vector<double>> views;
  views.reserve(static_cast<std::size_t>(k_weak));
  for (int a = 0; a < k_weak; ++a) {
    const LabelDistribution h = predict(weak_augment(x, rng));
    if (!views.empty() && views.front().size() != h.size()) {
      throw Error(Err::DimensionMismatch, "predictor changed output size across views");
    }
    views.emplace_back(h.values().begin(), h.values().end());
  }
  // Identical views average to themselves; taking that branch keeps the
  // identity-augmentation case exact for every k_weak.
  bool all_equal = true;
  for (std::size_t a = 1; a < views.size() && all_equal; ++a) {
    all_equal = views[a] == views.front();
  }
  if (all_equal) return LabelDistribution::validated(std::move(views.front()));

  std::vector<double> mean(views.front().size(), 0.0);
  for (const auto& view : views) {
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += view[j];
  }
  for (double& v : mean) v /= static_cast<double>(k_weak);
  return LabelDistribution::validated(std::move(mean));
}

std::vector<PairIndicator> significant_pairs(const LabelDistribution& source, double t) {
  if (!(t >= 0.0 && t < 1.0)) {
    throw Error(Err::ConfigInvalid, "threshold t must be in [0,1)");
  }
  std::vector<PairIndicator> pairs;
  for (std::size_t j = 0; j + 1 < source.size(); ++j) {
    for (std::size_t k = j + 1; k < source.size(); ++k) {
      const double gap = source[j] - source[k];
      if (gap > t) {
        pairs.push_back({j, k, gap});
      } else if (-gap > t) {
        pairs.push_back({k, j, -gap});
      }
    }
  }
  return pairs;
}

double prr_labeled_loss(const LabelDistribution& pred, const LabelDistribution& truth,
                        double t) {
  if (pred.size() != truth.size()) {
    throw Error(Err::DimensionMismatch, "pred/truth sizes differ");
  }
  double sum = 0.0;
  for (const PairIndicator& pair : significant_pairs(truth, t)) {
    sum += std::max(0.0, pair.gap - (pred[pair.hi] - pred[pair.lo]));
  }
  return sum;
}

double prr_unlabeled_loss(const LabelDistribution& pred_strong, const LabelDistribution& pld,
                          double t) {
  if (pred_strong.size() != pld.size()) {
    throw Error(Err::DimensionMismatch, "pred/pld sizes differ");
  }
  double sum = 0.0;
  for (const PairIndicator& pair : significant_pairs(pld, t)) {
    sum += std::max(0.0, -(pred_strong[pair.hi] - pred_strong[pair.lo]));
  }
  return sum;
}

LossBreakdown total_loss(double l_s, double l_uc, double l_prr_l, double l_prr_u,
                         double lambda) {
  constexpr double kNoise = -1e-12;  // rounding slack on mathematically >= 0 terms
  for (const double term : {l_s, l_uc, l_prr_l, l_prr_u, lambda}) {
    if (!(term >= kNoise) || !std::isfinite(term)) {
      throw Error(Err::NegativeTerm, "loss terms and lambda must be >= 0");
    }
  }
  LossBreakdown out;
  out.supervised = std::max(0.0, l_s);
  out.consistency = std::max(0.0, l_uc);
  out.prr_labeled = std::max(0.0, l_prr_l);
  out.prr_unlabeled = std::max(0.0, l_prr_u);
  out.lambda = lambda;
  out.total = out.supervised + out.consistency + lambda * (out.prr_labeled + out.prr_unlabeled);
  return out;
}

}  // namespace rankmatch
