#include "rankmatch/trainer.hpp"

#include <cmath>
#include <numbers>

#include "rankmatch/augment.hpp"
#include "rankmatch/losses.hpp"

namespace rankmatch {

void ema_update(EmaState& state, const ModelParams& params) {
  if (!state.shadow.same_shape(params)) {
    throw Error(Err::ShapeMismatch, "shadow and live parameter shapes differ");
  }
  const double d = state.decay;
  for (std::size_t i = 0; i < params.flat.size(); ++i) {
    state.shadow.flat[i] = d * state.shadow.flat[i] + (1.0 - d) * params.flat[i];
  }
}

double one_cycle_lr(std::int64_t step, std::int64_t total_steps, double max_lr) {
  if (total_steps < 1 || step < 0 || step >= total_steps) {
    throw Error(Err::StepOutOfRange,
                "step " + std::to_string(step) + " of " + std::to_string(total_steps));
  }
  if (total_steps == 1) return max_lr;
  const double start = max_lr / 25.0;
  const double floor = max_lr / 1e4;
  std::int64_t peak = std::llround(0.3 * static_cast<double>(total_steps));
  peak = std::clamp<std::int64_t>(peak, 1, total_steps - 1);
  if (step <= peak) {
    return start + (max_lr - start) * static_cast<double>(step) / static_cast<double>(peak);
  }
  const double frac =
      static_cast<double>(step - peak) / static_cast<double>(total_steps - 1 - peak);
  return floor + (max_lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

std::vector<std::size_t> epoch_labeled_order(std::uint64_t seed, std::uint64_t epoch,
                                             std::size_t n) {
  Rng rng = make_stream(seed, Stream::ShuffleLabeled, epoch);
  return seeded_permutation(n, rng);
}

UnlabeledSampler::UnlabeledSampler(std::uint64_t seed, std::size_t pool_size)
    : seed_(seed), pool_size_(pool_size) {}

void UnlabeledSampler::reshuffle() {
  Rng rng = make_stream(seed_, Stream::ShuffleUnlabeled, reshuffle_count_++);
  perm_ = seeded_permutation(pool_size_, rng);
  cursor_ = 0;
}

std::vector<std::size_t> UnlabeledSampler::draw(std::size_t count) {
  std::vector<std::size_t> out;
  if (pool_size_ == 0) return out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (cursor_ == perm_.size()) reshuffle();
    out.push_back(perm_[cursor_++]);
  }
  return out;
}

StepBatch assemble_step_batch(const Dataset& data, const TrainConfig& config,
                              std::uint64_t epoch, std::span<const std::size_t> labeled_idx,
                              std::span<const std::size_t> unlabeled_idx,
                              const ModelParams& pld_model) {
  StepBatch batch;
  batch.labeled_inputs.reserve(labeled_idx.size());
  batch.targets.reserve(labeled_idx.size());
  for (const std::size_t idx : labeled_idx) {
    const LabeledExample& ex = data.labeled[idx];
    Rng rng = make_stream(config.seed, Stream::WeakLabeled, epoch, idx);
    batch.labeled_inputs.push_back(weak_augment(ex.features, config.weak_sigma, rng));
    batch.targets.push_back(ex.target);
  }
  batch.unlabeled_inputs.reserve(unlabeled_idx.size());
  batch.plds.reserve(unlabeled_idx.size());
  auto predict = [&pld_model](const FeatureVector& x) { return forward(pld_model, x); };
  auto weak = [&config](const FeatureVector& x, Rng& rng) {
    return weak_augment(x, config.weak_sigma, rng);
  };
  for (const std::size_t idx : unlabeled_idx) {
    const UnlabeledExample& ex = data.unlabeled[idx];
    Rng pld_rng = make_stream(config.seed, Stream::WeakPld, epoch, idx);
    batch.plds.push_back(build_pld(predict, ex.features, config.k_weak, weak, pld_rng));
    Rng strong_rng = make_stream(config.seed, Stream::Strong, epoch, idx);
    batch.unlabeled_inputs.push_back(
        strong_augment(ex.features, config.strong_sigma, config.strong_dropout, strong_rng));
  }
  return batch;
}

MetricsReport evaluate_model(const ModelParams& params,
                             const std::vector<LabeledExample>& examples) {
  std::vector<LabelDistribution> truths;
  std::vector<LabelDistribution> preds;
  truths.reserve(examples.size());
  preds.reserve(examples.size());
  for (const auto& ex : examples) {
    truths.push_back(ex.target);
    preds.push_back(forward(params, ex.features));
  }
  return evaluate_all(truths, preds);
}

TrainResult train(const Dataset& data, const std::optional<Dataset>& test,
                  const TrainConfig& config) {
  config.validate();
  if (data.labeled.empty()) {
    throw Error(Err::EmptyLabeledPool, "training needs at least one labeled example");
  }

  const std::size_t n = data.labeled.size();
  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (n + batch_size - 1) / batch_size;
  const auto total_steps =
      static_cast<std::int64_t>(steps_per_epoch) * static_cast<std::int64_t>(config.epochs);

  ModelParams params = init_params(data.feature_dim, data.num_labels, std::nullopt, config.seed);
  OptState opt = OptState::zeros_like(params);
  EmaState ema{params, config.ema_decay};
  UnlabeledSampler unlabeled_sampler(config.seed, data.unlabeled.size());
  TrainHistory history;
  history.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));
  history.epoch_lr.reserve(static_cast<std::size_t>(config.epochs));

  std::int64_t global_step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<std::size_t> order =
        epoch_labeled_order(config.seed, static_cast<std::uint64_t>(epoch), n);
    double sum_s = 0.0;
    double sum_uc = 0.0;
    double sum_pl = 0.0;
    double sum_pu = 0.0;
    double last_lr = 0.0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      const std::size_t begin = step * batch_size;
      const std::size_t end = std::min(begin + batch_size, n);
      const std::span<const std::size_t> labeled_idx(order.data() + begin, end - begin);
      const std::vector<std::size_t> unlabeled_idx = unlabeled_sampler.draw(batch_size);

      const StepBatch batch =
          assemble_step_batch(data, config, static_cast<std::uint64_t>(epoch), labeled_idx,
                              unlabeled_idx, config.pld_from_ema ? ema.shadow : params);
      auto [loss, grads] = backward(params, batch, config.lambda, config.threshold_t);

      const double lr = one_cycle_lr(global_step, total_steps, config.max_lr);
      optimizer_step(params, grads, opt, static_cast<int>(global_step) + 1, lr,
                     config.weight_decay);
      ema_update(ema, params);

      sum_s += loss.supervised;
      sum_uc += loss.consistency;
      sum_pl += loss.prr_labeled;
      sum_pu += loss.prr_unlabeled;
      last_lr = lr;
      ++global_step;
    }
    const double inv = 1.0 / static_cast<double>(steps_per_epoch);
    history.epoch_loss.push_back(
        total_loss(sum_s * inv, sum_uc * inv, sum_pl * inv, sum_pu * inv, config.lambda));
    history.epoch_lr.push_back(last_lr);
    if (test.has_value() && !test->labeled.empty()) {
      history.epoch_metrics.push_back(evaluate_model(ema.shadow, test->labeled));
    }
  }
  return {std::move(params), std::move(ema), std::move(history)};
}

std::array<AblationStage, 3> ablate(const Dataset& data, const std::optional<Dataset>& test,
                                    const TrainConfig& config) {
  Dataset labeled_only;
  labeled_only.labeled = data.labeled;
  labeled_only.num_labels = data.num_labels;
  labeled_only.feature_dim = data.feature_dim;

  TrainConfig supervised_only = config;
  supervised_only.lambda = 0.0;

  return {
      AblationStage{"pretrain", train(labeled_only, test, supervised_only)},
      AblationStage{"+prr", train(labeled_only, test, config)},
      AblationStage{"+consistency", train(data, test, config)},
  };
}

}  // namespace rankmatch
