#include "rankmatch/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rankmatch/text_format.hpp"

namespace rankmatch {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kKinkTol = 1e-6;

std::size_t flat_size(std::size_t input_dim, std::size_t num_labels, std::size_t hidden_dim) {
  const std::size_t out_in = hidden_dim ? hidden_dim : input_dim;
  std::size_t n = num_labels * out_in + num_labels;
  if (hidden_dim) n += hidden_dim * input_dim + hidden_dim;
  return n;
}

// Raw per-sample forward pass, keeping the intermediates backward needs.
struct Fwd {
  std::vector<double> hidden_pre;
  std::vector<double> hidden_act;
  std::vector<double> probs;
};

Fwd fwd_raw(const ModelParams& p, const FeatureVector& x) {
  Fwd f;
  const std::size_t c = p.num_labels;
  std::span<const double> out_in;  // input to the output layer
  if (p.hidden_dim) {
    f.hidden_pre.resize(p.hidden_dim);
    f.hidden_act.resize(p.hidden_dim);
    const auto hw = p.hid_w();
    const auto hb = p.hid_b();
    for (std::size_t r = 0; r < p.hidden_dim; ++r) {
      double acc = hb[r];
      for (std::size_t s = 0; s < p.input_dim; ++s) acc += hw[r * p.input_dim + s] * x[s];
      f.hidden_pre[r] = acc;
      f.hidden_act[r] = std::max(0.0, acc);
    }
    out_in = f.hidden_act;
  }
  std::vector<double> logits(c);
  const auto ow = p.out_w();
  const auto ob = p.out_b();
  const std::size_t in_dim = p.out_input_dim();
  for (std::size_t q = 0; q < c; ++q) {
    double acc = ob[q];
    if (p.hidden_dim) {
      for (std::size_t r = 0; r < in_dim; ++r) acc += ow[q * in_dim + r] * out_in[r];
    } else {
      for (std::size_t r = 0; r < in_dim; ++r) acc += ow[q * in_dim + r] * x[r];
    }
    logits[q] = acc;
  }
  const LabelDistribution h = softmax_normalize(logits);
  f.probs.assign(h.values().begin(), h.values().end());
  return f;
}

double kl_raw(const LabelDistribution& target, std::span<const double> probs) {
  double sum = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    if (target[j] <= 0.0) continue;
    sum += target[j] * std::log(target[j] / std::max(probs[j], 1e-12));
  }
  return sum;
}

// Accumulates a per-sample logit gradient into the parameter gradient.
void backprop_sample(const ModelParams& p, const FeatureVector& x, const Fwd& f,
                     std::span<const double> dz, GradientSet& g) {
  const std::size_t c = p.num_labels;
  const std::size_t in_dim = p.out_input_dim();
  const std::size_t ow_off = p.hidden_dim ? p.hidden_dim * p.input_dim + p.hidden_dim : 0;
  const std::size_t ob_off = ow_off + c * in_dim;
  std::span<const double> a = p.hidden_dim ? std::span<const double>(f.hidden_act)
                                           : x.values();
  for (std::size_t q = 0; q < c; ++q) {
    for (std::size_t r = 0; r < in_dim; ++r) {
      g.flat[ow_off + q * in_dim + r] += dz[q] * a[r];
    }
    g.flat[ob_off + q] += dz[q];
  }
  if (p.hidden_dim) {
    const auto ow = p.out_w();
    for (std::size_t r = 0; r < p.hidden_dim; ++r) {
      if (f.hidden_pre[r] <= 0.0) continue;  // max(0,.) subgradient 0 at/below the kink
      double da = 0.0;
      for (std::size_t q = 0; q < c; ++q) da += dz[q] * ow[q * in_dim + r];
      for (std::size_t s = 0; s < p.input_dim; ++s) {
        g.flat[r * p.input_dim + s] += da * x[s];
      }
      g.flat[p.hidden_dim * p.input_dim + r] += da;
    }
  }
}

// Hinge states of one loss evaluation: activation flags in a fixed pair
// order plus the smallest |argument| seen. Used to spot kink crossings.
struct HingeTrace {
  std::vector<std::uint8_t> active;
  double min_abs_arg = std::numeric_limits<double>::infinity();
};

LossBreakdown batch_loss_traced(const ModelParams& params, const StepBatch& batch,
                                double lambda, double t, HingeTrace* trace) {
  const std::size_t n = batch.labeled_inputs.size();
  const std::size_t m = batch.unlabeled_inputs.size();
  double l_s = 0.0;
  double l_prr_l = 0.0;
  const bool ranking_on = lambda > 0.0;  // lambda = 0 disables the ranking terms outright
  for (std::size_t i = 0; i < n; ++i) {
    const Fwd f = fwd_raw(params, batch.labeled_inputs[i]);
    l_s += kl_raw(batch.targets[i], f.probs);
    if (!ranking_on) continue;
    for (const PairIndicator& pair : significant_pairs(batch.targets[i], t)) {
      const double arg = pair.gap - (f.probs[pair.hi] - f.probs[pair.lo]);
      if (arg > 0.0) l_prr_l += arg;
      if (trace) {
        trace->active.push_back(arg > 0.0 ? 1 : 0);
        trace->min_abs_arg = std::min(trace->min_abs_arg, std::abs(arg));
      }
    }
  }
  double l_uc = 0.0;
  double l_prr_u = 0.0;
  for (std::size_t u = 0; u < m; ++u) {
    const Fwd f = fwd_raw(params, batch.unlabeled_inputs[u]);
    l_uc += kl_raw(batch.plds[u], f.probs);
    if (!ranking_on) continue;
    for (const PairIndicator& pair : significant_pairs(batch.plds[u], t)) {
      const double arg = -(f.probs[pair.hi] - f.probs[pair.lo]);
      if (arg > 0.0) l_prr_u += arg;
      if (trace) {
        trace->active.push_back(arg > 0.0 ? 1 : 0);
        trace->min_abs_arg = std::min(trace->min_abs_arg, std::abs(arg));
      }
    }
  }
  l_s /= static_cast<double>(n);
  l_prr_l /= static_cast<double>(n);
  if (m > 0) {
    l_uc /= static_cast<double>(m);
    l_prr_u /= static_cast<double>(m);
  }
  return total_loss(l_s, l_uc, l_prr_l, l_prr_u, lambda);
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t input_dim, std::size_t num_labels,
                               std::size_t hidden_dim) {
  if (input_dim < 1 || num_labels < 2) {
    throw Error(Err::ShapeMismatch, "need input_dim >= 1 and num_labels >= 2");
  }
  ModelParams p;
  p.input_dim = input_dim;
  p.num_labels = num_labels;
  p.hidden_dim = hidden_dim;
  p.flat.assign(flat_size(input_dim, num_labels, hidden_dim), 0.0);
  return p;
}

std::span<double> ModelParams::hid_w() {
  return {flat.data(), hidden_dim * input_dim};
}
std::span<double> ModelParams::hid_b() {
  return {flat.data() + hidden_dim * input_dim, hidden_dim};
}
std::span<double> ModelParams::out_w() {
  const std::size_t off = hidden_dim ? hidden_dim * input_dim + hidden_dim : 0;
  return {flat.data() + off, num_labels * out_input_dim()};
}
std::span<double> ModelParams::out_b() {
  const std::size_t off = hidden_dim ? hidden_dim * input_dim + hidden_dim : 0;
  return {flat.data() + off + num_labels * out_input_dim(), num_labels};
}
std::span<const double> ModelParams::hid_w() const {
  return {flat.data(), hidden_dim * input_dim};
}
std::span<const double> ModelParams::hid_b() const {
  return {flat.data() + hidden_dim * input_dim, hidden_dim};
}
std::span<const double> ModelParams::out_w() const {
  const std::size_t off = hidden_dim ? hidden_dim * input_dim + hidden_dim : 0;
  return {flat.data() + off, num_labels * out_input_dim()};
}
std::span<const double> ModelParams::out_b() const {
  const std::size_t off = hidden_dim ? hidden_dim * input_dim + hidden_dim : 0;
  return {flat.data() + off + num_labels * out_input_dim(), num_labels};
}

bool ModelParams::same_shape(const ModelParams& other) const {
  return input_dim == other.input_dim && num_labels == other.num_labels &&
         hidden_dim == other.hidden_dim;
}

GradientSet GradientSet::zeros_like(const ModelParams& params) {
  GradientSet g;
  g.flat.assign(params.flat.size(), 0.0);
  return g;
}

OptState OptState::zeros_like(const ModelParams& params) {
  OptState s;
  s.m.assign(params.flat.size(), 0.0);
  s.v.assign(params.flat.size(), 0.0);
  return s;
}

ModelParams init_params(std::size_t feature_dim, std::size_t num_labels,
                        std::optional<std::size_t> hidden, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(feature_dim, num_labels, hidden.value_or(0));
  auto fill_glorot = [](std::span<double> w, std::size_t fan_in, std::size_t fan_out,
                        Rng& rng) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w) v = s * (2.0 * rng.next_unit() - 1.0);
  };
  if (p.hidden_dim) {
    Rng rng = make_stream(seed, Stream::ParamInit, 0);
    fill_glorot(p.hid_w(), p.input_dim, p.hidden_dim, rng);
  }
  Rng rng = make_stream(seed, Stream::ParamInit, 1);
  fill_glorot(p.out_w(), p.out_input_dim(), p.num_labels, rng);
  return p;
}

LabelDistribution forward(const ModelParams& params, const FeatureVector& x) {
  if (x.dim() != params.input_dim) {
    throw Error(Err::DimensionMismatch,
                "input dim " + std::to_string(x.dim()) + " vs model " +
                    std::to_string(params.input_dim));
  }
  const Fwd f = fwd_raw(params, x);
  return LabelDistribution::validated(f.probs);
}

void StepBatch::check(const ModelParams& params) const {
  if (labeled_inputs.size() != targets.size() || unlabeled_inputs.size() != plds.size()) {
    throw Error(Err::LengthMismatch, "batch views and targets differ in length");
  }
  if (labeled_inputs.empty()) {
    throw Error(Err::EmptyLabeledBatch, "a step needs at least one labeled sample");
  }
  for (const auto& x : labeled_inputs) {
    if (x.dim() != params.input_dim) throw Error(Err::DimensionMismatch, "labeled view dim");
  }
  for (const auto& d : targets) {
    if (d.size() != params.num_labels) throw Error(Err::DimensionMismatch, "target size");
  }
  for (const auto& x : unlabeled_inputs) {
    if (x.dim() != params.input_dim) throw Error(Err::DimensionMismatch, "unlabeled view dim");
  }
  for (const auto& p : plds) {
    if (p.size() != params.num_labels) throw Error(Err::DimensionMismatch, "pld size");
  }
}

LossBreakdown batch_loss(const ModelParams& params, const StepBatch& batch, double lambda,
                         double t) {
  batch.check(params);
  return batch_loss_traced(params, batch, lambda, t, nullptr);
}

std::pair<LossBreakdown, GradientSet> backward(const ModelParams& params,
                                               const StepBatch& batch, double lambda,
                                               double t) {
  batch.check(params);
  const std::size_t n = batch.labeled_inputs.size();
  const std::size_t m = batch.unlabeled_inputs.size();
  const std::size_t c = params.num_labels;
  GradientSet grads = GradientSet::zeros_like(params);

  double l_s = 0.0;
  double l_uc = 0.0;
  double l_prr_l = 0.0;
  double l_prr_u = 0.0;
  std::vector<double> g_h(c);
  std::vector<double> dz(c);

  auto accumulate = [&](const FeatureVector& x, const LabelDistribution& target,
                        bool zero_margin, double inv_batch, double& kl_acc,
                        double& prr_acc) {
    const Fwd f = fwd_raw(params, x);
    kl_acc += kl_raw(target, f.probs);

    std::fill(g_h.begin(), g_h.end(), 0.0);
    bool any_active = false;
    if (lambda > 0.0) {
      for (const PairIndicator& pair : significant_pairs(target, t)) {
        const double margin = zero_margin ? 0.0 : pair.gap;
        const double arg = margin - (f.probs[pair.hi] - f.probs[pair.lo]);
        if (arg > 0.0) {
          prr_acc += arg;
          g_h[pair.hi] -= 1.0;
          g_h[pair.lo] += 1.0;
          any_active = true;
        }
      }
    }

    // dL/dz = (h - target)/B + (lambda/B) J_softmax^T g_h,
    // with J^T g = h .* (g - <g,h>).
    for (std::size_t q = 0; q < c; ++q) dz[q] = (f.probs[q] - target[q]) * inv_batch;
    if (lambda > 0.0 && any_active) {
      double dot = 0.0;
      for (std::size_t q = 0; q < c; ++q) dot += g_h[q] * f.probs[q];
      for (std::size_t q = 0; q < c; ++q) {
        dz[q] += lambda * inv_batch * f.probs[q] * (g_h[q] - dot);
      }
    }
    backprop_sample(params, x, f, dz, grads);
  };

  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    accumulate(batch.labeled_inputs[i], batch.targets[i], false, inv_n, l_s, l_prr_l);
  }
  if (m > 0) {
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t u = 0; u < m; ++u) {
      accumulate(batch.unlabeled_inputs[u], batch.plds[u], true, inv_m, l_uc, l_prr_u);
    }
    l_uc *= inv_m;
    l_prr_u *= inv_m;
  }
  l_s *= inv_n;
  l_prr_l *= inv_n;
  return {total_loss(l_s, l_uc, l_prr_l, l_prr_u, lambda), std::move(grads)};
}

std::vector<double> central_differences(
    const std::function<double(std::span<const double>)>& f, std::vector<double> point,
    double eps) {
  if (!(eps > 0.0)) throw Error(Err::ConfigInvalid, "eps must be > 0");
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + eps;
    const double hi = f(point);
    point[i] = saved - eps;
    const double lo = f(point);
    point[i] = saved;
    grad[i] = (hi - lo) / (2.0 * eps);
  }
  return grad;
}

GradientSet finite_diff_grad(const ModelParams& params, const StepBatch& batch, double lambda,
                             double t, double eps) {
  batch.check(params);
  ModelParams work = params;
  auto loss_at = [&](std::span<const double> point) {
    std::copy(point.begin(), point.end(), work.flat.begin());
    return batch_loss_traced(work, batch, lambda, t, nullptr).total;
  };
  GradientSet g;
  g.flat = central_differences(loss_at, params.flat, eps);
  return g;
}

GradCheckReport check_gradients(const ModelParams& params, const StepBatch& batch,
                                double lambda, double t, double eps, double tolerance,
                                const GradientSet* analytic_override) {
  const GradientSet analytic =
      analytic_override ? *analytic_override : backward(params, batch, lambda, t).second;
  if (analytic.flat.size() != params.flat.size()) {
    throw Error(Err::ShapeMismatch, "gradient size does not match parameter count");
  }
  GradCheckReport report;
  ModelParams work = params;
  for (std::size_t i = 0; i < params.flat.size(); ++i) {
    const double saved = params.flat[i];
    HingeTrace hi_trace;
    work.flat[i] = saved + eps;
    const double hi = batch_loss_traced(work, batch, lambda, t, &hi_trace).total;
    HingeTrace lo_trace;
    work.flat[i] = saved - eps;
    const double lo = batch_loss_traced(work, batch, lambda, t, &lo_trace).total;
    work.flat[i] = saved;
    // A hinge that switches state inside [theta-eps, theta+eps], or sits
    // within 1e-6 of its kink, makes the central difference meaningless.
    if (hi_trace.active != lo_trace.active || hi_trace.min_abs_arg < kKinkTol ||
        lo_trace.min_abs_arg < kKinkTol) {
      ++report.skipped_kink;
      continue;
    }
    const double fd = (hi - lo) / (2.0 * eps);
    const double a = analytic.flat[i];
    const double rel = std::abs(fd - a) / std::max({1.0, std::abs(fd), std::abs(a)});
    report.max_rel_err = std::max(report.max_rel_err, rel);
    ++report.compared;
  }
  report.pass = report.max_rel_err <= tolerance;
  return report;
}

void optimizer_step(ModelParams& params, const GradientSet& grads, OptState& state, int step,
                    double lr, double weight_decay) {
  if (grads.flat.size() != params.flat.size() || state.m.size() != params.flat.size() ||
      state.v.size() != params.flat.size()) {
    throw Error(Err::ShapeMismatch, "optimizer buffers do not match parameter count");
  }
  if (step < 1) throw Error(Err::StepOutOfRange, "optimizer step is 1-based");
  const double bc1 = 1.0 - std::pow(kBeta1, step);
  const double bc2 = 1.0 - std::pow(kBeta2, step);
  for (std::size_t i = 0; i < params.flat.size(); ++i) {
    const double g = grads.flat[i];
    state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * g;
    state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params.flat[i] -= lr * (m_hat / (std::sqrt(v_hat) + kAdamEps) + weight_decay * params.flat[i]);
  }
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Err::IoError, "cannot open " + path + " for writing");
  out << "rankmatch-checkpoint v1\n";
  out << "dims " << params.input_dim << " " << params.num_labels << " " << params.hidden_dim
      << "\n";
  auto dump = [&out](const char* name, std::span<const double> w, std::size_t rows,
                     std::size_t cols) {
    out << "tensor " << name << " " << rows << " " << cols << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        if (c) out << " ";
        out << format_double(w[r * cols + c]);
      }
      out << "\n";
    }
  };
  if (params.hidden_dim) {
    dump("hid_w", params.hid_w(), params.hidden_dim, params.input_dim);
    dump("hid_b", params.hid_b(), 1, params.hidden_dim);
  }
  dump("out_w", params.out_w(), params.num_labels, params.out_input_dim());
  dump("out_b", params.out_b(), 1, params.num_labels);
  out << "end\n";
  if (!out) throw Error(Err::IoError, "write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Err::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "rankmatch-checkpoint v1") {
    throw Error(Err::ParseError, "bad checkpoint header in " + path);
  }
  std::size_t input_dim = 0;
  std::size_t num_labels = 0;
  std::size_t hidden_dim = 0;
  {
    std::string tag;
    if (!std::getline(in, line)) throw Error(Err::ParseError, "missing dims line");
    std::istringstream iss(line);
    if (!(iss >> tag >> input_dim >> num_labels >> hidden_dim) || tag != "dims") {
      throw Error(Err::ParseError, "bad dims line '" + line + "'");
    }
  }
  ModelParams p = ModelParams::zeros(input_dim, num_labels, hidden_dim);
  auto read_tensor = [&](const std::string& name, std::span<double> w, std::size_t rows,
                         std::size_t cols) {
    if (!std::getline(in, line)) throw Error(Err::ParseError, "missing tensor " + name);
    std::istringstream head(line);
    std::string tag;
    std::string got;
    std::size_t r = 0;
    std::size_t c = 0;
    if (!(head >> tag >> got >> r >> c) || tag != "tensor" || got != name || r != rows ||
        c != cols) {
      throw Error(Err::ParseError, "bad tensor header '" + line + "'");
    }
    for (std::size_t row = 0; row < rows; ++row) {
      if (!std::getline(in, line)) throw Error(Err::ParseError, "short tensor " + name);
      std::istringstream vals(line);
      std::string cell;
      for (std::size_t col = 0; col < cols; ++col) {
        if (!(vals >> cell)) throw Error(Err::ParseError, "short row in tensor " + name);
        w[row * cols + col] = parse_double(cell);
      }
      if (vals >> cell) throw Error(Err::ParseError, "trailing cells in tensor " + name);
    }
  };
  if (hidden_dim) {
    read_tensor("hid_w", p.hid_w(), hidden_dim, input_dim);
    read_tensor("hid_b", p.hid_b(), 1, hidden_dim);
  }
  read_tensor("out_w", p.out_w(), num_labels, p.out_input_dim());
  read_tensor("out_b", p.out_b(), 1, num_labels);
  if (!std::getline(in, line) || line != "end") {
    throw Error(Err::ParseError, "missing end marker in " + path);
  }
  return p;
}

}  // namespace rankmatch
