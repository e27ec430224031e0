#include "rankmatch/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace rankmatch {

namespace {

constexpr double kKlFloor = 1e-12;

void check_dims(const LabelDistribution& truth, const LabelDistribution& pred) {
  if (truth.size() != pred.size()) {
    throw Error(Err::DimensionMismatch,
                "distribution sizes " + std::to_string(truth.size()) + " vs " +
                    std::to_string(pred.size()));
  }
}

}  // namespace

double chebyshev(const LabelDistribution& truth, const LabelDistribution& pred) {
  check_dims(truth, pred);
  double worst = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    worst = std::max(worst, std::abs(truth[j] - pred[j]));
  }
  return worst;
}

double clark(const LabelDistribution& truth, const LabelDistribution& pred) {
  check_dims(truth, pred);
  double sum = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double denom = truth[j] + pred[j];
    if (denom == 0.0) continue;
    const double r = (truth[j] - pred[j]) / denom;
    sum += r * r;
  }
  return std::sqrt(sum);
}

double canberra(const LabelDistribution& truth, const LabelDistribution& pred) {
  check_dims(truth, pred);
  double sum = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double denom = truth[j] + pred[j];
    if (denom == 0.0) continue;
    sum += std::abs(truth[j] - pred[j]) / denom;
  }
  return sum;
}

double kl_divergence(const LabelDistribution& truth, const LabelDistribution& pred) {
  check_dims(truth, pred);
  double sum = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    if (truth[j] <= 0.0) continue;
    sum += truth[j] * std::log(truth[j] / std::max(pred[j], kKlFloor));
  }
  return sum;
}

double intersection(const LabelDistribution& truth, const LabelDistribution& pred) {
  check_dims(truth, pred);
  double sum = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    sum += std::min(truth[j], pred[j]);
  }
  return sum;
}

double cosine(const LabelDistribution& truth, const LabelDistribution& pred) {
  check_dims(truth, pred);
  double dot = 0.0;
  double nt = 0.0;
  double np = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    dot += truth[j] * pred[j];
    nt += truth[j] * truth[j];
    np += pred[j] * pred[j];
  }
  if (nt == 0.0 || np == 0.0) {
    throw Error(Err::ZeroVector, "cosine needs a nonzero entry on each side");
  }
  return dot / (std::sqrt(nt) * std::sqrt(np));
}

MetricsReport evaluate_all(const std::vector<LabelDistribution>& truths,
                           const std::vector<LabelDistribution>& preds) {
  if (truths.empty()) {
    throw Error(Err::EmptyInput, "evaluate_all on empty lists");
  }
  if (truths.size() != preds.size()) {
    throw Error(Err::LengthMismatch,
                std::to_string(truths.size()) + " truths vs " +
                    std::to_string(preds.size()) + " preds");
  }
  MetricsReport report;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    report.chebyshev += chebyshev(truths[i], preds[i]);
    report.clark += clark(truths[i], preds[i]);
    report.canberra += canberra(truths[i], preds[i]);
    report.kl += kl_divergence(truths[i], preds[i]);
    report.intersection += intersection(truths[i], preds[i]);
    report.cosine += cosine(truths[i], preds[i]);
  }
  const double n = static_cast<double>(truths.size());
  report.chebyshev /= n;
  report.clark /= n;
  report.canberra /= n;
  report.kl /= n;
  report.intersection /= n;
  report.cosine /= n;
  report.sample_count = truths.size();
  return report;
}

}  // namespace rankmatch
