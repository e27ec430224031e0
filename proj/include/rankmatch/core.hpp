#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rankmatch {

enum class Err {
  NegativeEntry,
  SumNotOne,
  TooFewLabels,
  NonFiniteValue,
  NonFiniteLogit,
  DimensionMismatch,
  LengthMismatch,
  EmptyInput,
  ZeroVector,
  NegativeTerm,
  ShapeMismatch,
  StepOutOfRange,
  ConfigInvalid,
  EmptyLabeledBatch,
  EmptyLabeledPool,
  ParseError,
  InvalidDistribution,
  InconsistentWidth,
  IoError,
  FlagError,
};

const char* err_name(Err code);

/// Domain error carrying a machine-checkable code plus a human message.
class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& message)
      : std::runtime_error(std::string(err_name(code)) + ": " + message), code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

/// Point on the probability simplex over c >= 2 labels. Immutable after
/// construction; construction validates (never renormalizes).
class LabelDistribution {
 public:
  /// Throws NegativeEntry, SumNotOne (|sum-1| > 1e-9) or TooFewLabels.
  static LabelDistribution validated(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t j) const { return values_[j]; }
  std::span<const double> values() const { return values_; }

  static constexpr double kSumTolerance = 1e-9;

 private:
  explicit LabelDistribution(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

/// Alias for the validating factory, matching the operation name used
/// throughout the test suite.
inline LabelDistribution validate_distribution(std::vector<double> values) {
  return LabelDistribution::validated(std::move(values));
}

/// Dense real-valued feature vector; all entries finite.
class FeatureVector {
 public:
  static FeatureVector of(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

 private:
  explicit FeatureVector(std::vector<double> v) : values_(std::move(v)) {}
  std::vector<double> values_;
};

struct LabeledExample {
  FeatureVector features;
  LabelDistribution target;
};

struct UnlabeledExample {
  FeatureVector features;
};

/// Labeled pool of size n plus unlabeled pool of size m, with consistent
/// feature width and label count across every example.
struct Dataset {
  std::vector<LabeledExample> labeled;
  std::vector<UnlabeledExample> unlabeled;
  std::size_t num_labels = 0;
  std::size_t feature_dim = 0;

  /// Throws DimensionMismatch on mixed widths or mixed label counts.
  static Dataset build(std::vector<LabeledExample> labeled,
                       std::vector<UnlabeledExample> unlabeled);
};

struct TrainConfig {
  double lambda = 0.01;        // weight on the two ranking losses
  double threshold_t = 0.2;    // significant-pair gap threshold
  int k_weak = 2;              // weak views averaged into each pseudo target
  int epochs = 30;
  int batch_size = 32;
  double max_lr = 1e-4;
  double ema_decay = 0.98;
  double weak_sigma = 0.05;
  double strong_sigma = 0.2;
  double strong_dropout = 0.25;
  std::uint64_t seed = 1;
  double weight_decay = 0.0;
  bool pld_from_ema = false;   // pseudo targets from the shadow model instead of the live one

  /// Throws ConfigInvalid when any field is out of range
  /// (notably strong_sigma < weak_sigma).
  void validate() const;
};

/// The four objective terms of one step or epoch, plus their weighted total.
struct LossBreakdown {
  double supervised = 0.0;
  double consistency = 0.0;
  double prr_labeled = 0.0;
  double prr_unlabeled = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

/// Mean of the six evaluation scores over a test set.
struct MetricsReport {
  double chebyshev = 0.0;
  double clark = 0.0;
  double canberra = 0.0;
  double kl = 0.0;
  double intersection = 0.0;
  double cosine = 0.0;
  std::size_t sample_count = 0;
};

}  // namespace rankmatch
