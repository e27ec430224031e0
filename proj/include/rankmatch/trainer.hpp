#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankmatch/core.hpp"
#include "rankmatch/metrics.hpp"
#include "rankmatch/model.hpp"

namespace rankmatch {

/// Shadow copy of the parameters for stable evaluation.
struct EmaState {
  ModelParams shadow;
  double decay = 0.98;
};

/// shadow <- decay * shadow + (1 - decay) * params, elementwise.
void ema_update(EmaState& state, const ModelParams& params);

/// One-cycle schedule: linear ramp from max_lr/25 to max_lr over the first
/// 30% of steps, then cosine decay down to max_lr/1e4 at the final step.
double one_cycle_lr(std::int64_t step, std::int64_t total_steps, double max_lr);

struct TrainHistory {
  std::vector<LossBreakdown> epoch_loss;     // per-epoch means of the step losses
  std::vector<MetricsReport> epoch_metrics;  // per-epoch test scores (empty without a test set)
  std::vector<double> epoch_lr;              // lr at the last step of each epoch
};

struct TrainResult {
  ModelParams params;
  EmaState ema;
  TrainHistory history;
};

/// Labeled batch order for one epoch: a seeded permutation of the pool.
std::vector<std::size_t> epoch_labeled_order(std::uint64_t seed, std::uint64_t epoch,
                                             std::size_t n);

/// Draws unlabeled indices batch by batch, cycling through seeded
/// reshuffles of the pool as it is exhausted.
class UnlabeledSampler {
 public:
  UnlabeledSampler(std::uint64_t seed, std::size_t pool_size);
  std::vector<std::size_t> draw(std::size_t count);

 private:
  void reshuffle();
  std::uint64_t seed_;
  std::size_t pool_size_;
  std::uint64_t reshuffle_count_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> perm_;
};

/// Materializes the augmented views and pseudo targets for one step.
/// Augmentation streams are keyed by (seed, purpose, epoch, dataset index),
/// so a sample's views do not depend on batch composition; `pld_model` is
/// the predictor the pseudo targets are built from.
StepBatch assemble_step_batch(const Dataset& data, const TrainConfig& config,
                              std::uint64_t epoch, std::span<const std::size_t> labeled_idx,
                              std::span<const std::size_t> unlabeled_idx,
                              const ModelParams& pld_model);

/// Forward every example and average the six scores.
MetricsReport evaluate_model(const ModelParams& params,
                             const std::vector<LabeledExample>& examples);

/// Full training loop: per step, draw a labeled and an unlabeled minibatch,
/// build one pseudo target per unlabeled sample, take one optimizer step at
/// the one-cycle rate and refresh the shadow model. Per-epoch test metrics
/// come from the shadow model. Fully deterministic per (data, config).
TrainResult train(const Dataset& data, const std::optional<Dataset>& test,
                  const TrainConfig& config);

struct AblationStage {
  std::string name;
  TrainResult result;
};

/// Three runs sharing the seed: supervised term only, supervised plus the
/// labeled ranking loss, and the full objective with unlabeled data.
std::array<AblationStage, 3> ablate(const Dataset& data, const std::optional<Dataset>& test,
                                    const TrainConfig& config);

}  // namespace rankmatch
