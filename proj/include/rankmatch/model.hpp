#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rankmatch/core.hpp"
#include "rankmatch/losses.hpp"
#include "rankmatch/rng.hpp"

namespace rankmatch {

/// Weights of the predictor: linear-softmax by default, or a single
/// hidden layer with max(0,.) activation when hidden_dim > 0. All tensors
/// live in one flat buffer ordered [hid_w, hid_b, out_w, out_b] so the
/// optimizer, the moving average and the finite-difference loop can treat
/// the parameter set as a single vector.
struct ModelParams {
  std::size_t input_dim = 0;
  std::size_t num_labels = 0;
  std::size_t hidden_dim = 0;  // 0 = linear variant
  std::vector<double> flat;

  static ModelParams zeros(std::size_t input_dim, std::size_t num_labels,
                           std::size_t hidden_dim = 0);

  std::size_t out_input_dim() const { return hidden_dim ? hidden_dim : input_dim; }
  std::size_t size() const { return flat.size(); }

  // Tensor views into the flat buffer.
  std::span<double> hid_w();
  std::span<double> hid_b();
  std::span<double> out_w();
  std::span<double> out_b();
  std::span<const double> hid_w() const;
  std::span<const double> hid_b() const;
  std::span<const double> out_w() const;
  std::span<const double> out_b() const;

  bool same_shape(const ModelParams& other) const;
};

/// One real per parameter, in the same flat layout as ModelParams.
struct GradientSet {
  std::vector<double> flat;

  static GradientSet zeros_like(const ModelParams& params);
};

/// First/second moment accumulators for the adaptive optimizer.
struct OptState {
  std::vector<double> m;
  std::vector<double> v;

  static OptState zeros_like(const ModelParams& params);
};

/// Glorot-uniform weights on [-s, s] with s = sqrt(6 / (fan_in + fan_out)),
/// zero biases, deterministic per seed.
ModelParams init_params(std::size_t feature_dim, std::size_t num_labels,
                        std::optional<std::size_t> hidden, std::uint64_t seed);

/// Softmax of the raw model outputs for x.
LabelDistribution forward(const ModelParams& params, const FeatureVector& x);

/// Everything one optimization step consumes, with augmentation already
/// applied and pseudo targets already built. Both the analytic gradient and
/// the finite-difference oracle run on this fixed snapshot, which is what
/// keeps the pseudo targets constant with respect to differentiation.
struct StepBatch {
  std::vector<FeatureVector> labeled_inputs;    // weak views of labeled samples
  std::vector<LabelDistribution> targets;       // ground-truth distributions
  std::vector<FeatureVector> unlabeled_inputs;  // strong views of unlabeled samples
  std::vector<LabelDistribution> plds;          // fixed pseudo targets

  void check(const ModelParams& params) const;
};

/// Loss terms of the batch under the current parameters, without gradients.
LossBreakdown batch_loss(const ModelParams& params, const StepBatch& batch, double lambda,
                         double t);

/// Analytic gradient of the total objective over all parameters. KL terms
/// contribute (h - target) / batch_size at the logit layer; active ranking
/// hinges contribute -+1 per pair through the softmax Jacobian; hinge
/// subgradient at an exact kink is 0.
std::pair<LossBreakdown, GradientSet> backward(const ModelParams& params,
                                               const StepBatch& batch, double lambda,
                                               double t);

/// Generic central-difference engine: df/dx_i ~ (f(x+eps e_i) - f(x-eps e_i)) / 2eps.
std::vector<double> central_differences(const std::function<double(std::span<const double>)>& f,
                                        std::vector<double> point, double eps);

/// Central differences of the total batch loss, pseudo targets held fixed.
GradientSet finite_diff_grad(const ModelParams& params, const StepBatch& batch, double lambda,
                             double t, double eps = 1e-5);

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t compared = 0;
  std::size_t skipped_kink = 0;  // coordinates excluded near a hinge kink
  bool pass = false;
};

/// Compares backward against the finite-difference oracle coordinate by
/// coordinate. A coordinate is excluded when perturbing it flips any hinge
/// activation or leaves a hinge argument within 1e-6 of zero (the
/// subgradient is not well-defined by finite differences there).
/// `analytic_override` substitutes the gradient under test; the gradcheck
/// command uses it to prove the check catches a corrupted gradient.
GradCheckReport check_gradients(const ModelParams& params, const StepBatch& batch,
                                double lambda, double t, double eps = 1e-5,
                                double tolerance = 1e-4,
                                const GradientSet* analytic_override = nullptr);

/// One adaptive-moment update with decoupled weight decay:
/// m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2, bias-corrected, then
/// theta <- theta - lr (m^ / (sqrt(v^) + eps) + weight_decay * theta).
/// b1 = 0.9, b2 = 0.999, eps = 1e-8. `step` is 1-based.
void optimizer_step(ModelParams& params, const GradientSet& grads, OptState& state, int step,
                    double lr, double weight_decay);

/// Textual checkpoint with shape headers; round-trips bit-exactly.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace rankmatch
