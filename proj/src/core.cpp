#include "rankmatch/core.hpp"

#include <cmath>

namespace rankmatch {

const char* err_name(Err code) {
  switch (code) {
    case Err::NegativeEntry: return "NegativeEntry";
    case Err::SumNotOne: return "SumNotOne";
    case Err::TooFewLabels: return "TooFewLabels";
    case Err::NonFiniteValue: return "NonFiniteValue";
    case Err::NonFiniteLogit: return "NonFiniteLogit";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::EmptyInput: return "EmptyInput";
    case Err::ZeroVector: return "ZeroVector";
    case Err::NegativeTerm: return "NegativeTerm";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::StepOutOfRange: return "StepOutOfRange";
    case Err::ConfigInvalid: return "ConfigInvalid";
    case Err::EmptyLabeledBatch: return "EmptyLabeledBatch";
    case Err::EmptyLabeledPool: return "EmptyLabeledPool";
    case Err::ParseError: return "ParseError";
    case Err::InvalidDistribution: return "InvalidDistribution";
    case Err::InconsistentWidth: return "InconsistentWidth";
    case Err::IoError: return "IoError";
    case Err::FlagError: return "FlagError";
  }
  return "Unknown";
}

LabelDistribution LabelDistribution::validated(std::vector<double> values) {
  if (values.size() < 2) {
    throw Error(Err::TooFewLabels,
                "need at least 2 labels, got " + std::to_string(values.size()));
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double v = values[j];
    if (!std::isfinite(v)) {
      throw Error(Err::NonFiniteValue, "entry " + std::to_string(j) + " is not finite");
    }
    if (v < 0.0) {
      throw Error(Err::NegativeEntry,
                  "entry " + std::to_string(j) + " = " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(Err::SumNotOne, "entries sum to " + std::to_string(sum));
  }
  return LabelDistribution(std::move(values));
}

FeatureVector FeatureVector::of(std::vector<double> values) {
  if (values.empty()) {
    throw Error(Err::EmptyInput, "feature vector must have dim >= 1");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(Err::NonFiniteValue, "feature " + std::to_string(i) + " is not finite");
    }
  }
  return FeatureVector(std::move(values));
}

Dataset Dataset::build(std::vector<LabeledExample> labeled,
                       std::vector<UnlabeledExample> unlabeled) {
  Dataset ds;
  for (const auto& ex : labeled) {
    if (ds.feature_dim == 0) ds.feature_dim = ex.features.dim();
    if (ds.num_labels == 0) ds.num_labels = ex.target.size();
    if (ex.features.dim() != ds.feature_dim) {
      throw Error(Err::DimensionMismatch, "mixed feature widths in labeled pool");
    }
    if (ex.target.size() != ds.num_labels) {
      throw Error(Err::DimensionMismatch, "mixed label counts in labeled pool");
    }
  }
  for (const auto& ex : unlabeled) {
    if (ds.feature_dim == 0) ds.feature_dim = ex.features.dim();
    if (ex.features.dim() != ds.feature_dim) {
      throw Error(Err::DimensionMismatch, "mixed feature widths in unlabeled pool");
    }
  }
  ds.labeled = std::move(labeled);
  ds.unlabeled = std::move(unlabeled);
  return ds;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Err::ConfigInvalid, msg); };
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be >= 0");
  if (!(threshold_t >= 0.0 && threshold_t < 1.0)) fail("threshold_t must be in [0,1)");
  if (k_weak < 1) fail("k_weak must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(max_lr > 0.0) || !std::isfinite(max_lr)) fail("max_lr must be > 0");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) fail("ema_decay must be in [0,1)");
  if (!(weak_sigma >= 0.0) || !std::isfinite(weak_sigma)) fail("weak_sigma must be >= 0");
  if (!(strong_sigma >= 0.0) || !std::isfinite(strong_sigma)) fail("strong_sigma must be >= 0");
  if (strong_sigma < weak_sigma) fail("strong_sigma must be >= weak_sigma");
  if (!(strong_dropout >= 0.0 && strong_dropout < 1.0)) fail("strong_dropout must be in [0,1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) fail("weight_decay must be >= 0");
}

}  // namespace rankmatch
