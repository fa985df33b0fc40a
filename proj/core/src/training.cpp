#include "pcn/training.hpp"

namespace pcn {
namespace {

int argmax_lowest(const Vec& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

bool any_relaxation(const RelaxationFlags* flags) {
  return flags != nullptr &&
         (flags->use_psi || flags->drop_derivative || flags->use_zeta);
}

double relaxed_free_energy(const NetworkState& state,
                           const NetworkParams& params,
                           const NetworkSpec& spec,
                           const RelaxationFlags& flags) {
  auto eps = relaxed_errors(state, params, spec, flags);
  double f = 0.0;
  for (int l = 0; l <= spec.levels(); ++l)
    f += eps[l].dot(params.precision[l] * eps[l]);
  return f;
}

// Weight descent direction under the relaxed regime: the plain Hebbian rule
// on the (possibly zeta-shaped) errors, with the derivative gate dropped
// when requested.
std::vector<Mat> relaxed_weight_gradients(const NetworkState& state,
                                          const NetworkParams& params,
                                          const NetworkSpec& spec,
                                          const RelaxationFlags& flags) {
  const int L = spec.levels();
  auto eps = relaxed_errors(state, params, spec, flags);
  std::vector<Mat> g(L + 1);
  for (int l = 1; l <= L; ++l) {
    Vec weighted = params.precision[l - 1] * eps[l - 1];
    if (!flags.drop_derivative) {
      const Vec pre = params.theta[l] * state.mu[l];
      weighted = activate_prime(spec.activation[l - 1], pre)
                     .cwiseProduct(weighted);
    }
    g[l] = weighted * state.mu[l].transpose();
  }
  return g;
}

}  // namespace

ClampMode clamp_mode_from_string(const std::string& name) {
  if (name == "unsupervised") return ClampMode::unsupervised;
  if (name == "supervised_forward") return ClampMode::supervised_forward;
  if (name == "supervised_backward") return ClampMode::supervised_backward;
  throw StructuralError("unknown clamp mode: " + name);
}

std::string to_string(ClampMode m) {
  switch (m) {
    case ClampMode::unsupervised: return "unsupervised";
    case ClampMode::supervised_forward: return "supervised_forward";
    case ClampMode::supervised_backward: return "supervised_backward";
  }
  return "unsupervised";
}

void LabeledBatch::validate(ClampMode mode) const {
  require(!inputs.empty(), "empty batch");
  if (mode == ClampMode::unsupervised) {
    require(!labels.has_value(), "labels present in unsupervised mode");
  } else {
    require(labels.has_value(), "supervised mode requires labels");
    require(labels->size() == inputs.size(),
            "need one label per input");
  }
}

Vec one_hot(int index, int dim, double smoothing) {
  require(dim >= 1 && index >= 0 && index < dim, "one-hot index out of range");
  require(smoothing >= 0.0 && smoothing < 1.0, "smoothing must be in [0, 1)");
  Vec v = Vec::Constant(dim, smoothing / dim);
  v[index] += 1.0 - smoothing;
  return v;
}

void apply_clamps(ClampMode mode, const Vec& input,
                  const std::optional<Vec>& label, NetworkState& state,
                  const NetworkSpec& spec) {
  const int L = spec.levels();
  switch (mode) {
    case ClampMode::unsupervised:
      require(!label.has_value(), "labels present in unsupervised mode");
      require(input.size() == spec.layer_dims[0], "input dimension mismatch");
      state.mu[0] = input;
      state.clamped[0] = true;
      break;
    case ClampMode::supervised_forward:
      require(label.has_value(), "supervised mode requires a label");
      require(input.size() == spec.layer_dims[0], "input dimension mismatch");
      require(label->size() == spec.layer_dims[L], "label dimension mismatch");
      state.mu[0] = input;
      state.mu[L] = *label;
      state.clamped[0] = true;
      state.clamped[L] = true;
      break;
    case ClampMode::supervised_backward:
      require(label.has_value(), "supervised mode requires a label");
      require(label->size() == spec.layer_dims[0], "label dimension mismatch");
      require(input.size() == spec.layer_dims[L], "input dimension mismatch");
      state.mu[0] = *label;
      state.mu[L] = input;
      state.clamped[0] = true;
      state.clamped[L] = true;
      break;
  }
}

InferenceResult run_inference_flags(NetworkState& state,
                                    const NetworkParams& params,
                                    const NetworkSpec& spec,
                                    const RelaxationFlags* flags) {
  if (!any_relaxation(flags)) return run_inference(state, params, spec);
  const int L = spec.levels();
  state.eps = relaxed_errors(state, params, spec, *flags);
  InferenceResult res;
  for (int it = 1; it <= spec.max_iters; ++it) {
    std::vector<Vec> before = state.mu;
    relaxed_infer_step(state, params, spec, *flags);
    res.iterations = it;
    double max_change = 0.0;
    for (int l = 0; l <= L; ++l) {
      if (!state.mu[l].allFinite())
        throw DivergenceError("inference diverged at layer " +
                              std::to_string(l));
      if (!state.clamped[l])
        max_change = std::max(max_change,
                              (state.mu[l] - before[l]).cwiseAbs().maxCoeff());
    }
    if (max_change < spec.tol) break;
  }
  res.final_free_energy = relaxed_free_energy(state, params, spec, *flags);
  if (!std::isfinite(res.final_free_energy))
    throw DivergenceError("non-finite free energy after inference");
  return res;
}

EmResult em_epoch_mode(const LabeledBatch& batch, ClampMode mode,
                       NetworkParams& params, const NetworkSpec& spec,
                       Rng& rng, const TrainOptions& opts) {
  batch.validate(mode);
  const int L = spec.levels();
  const bool relaxed = any_relaxation(opts.relax);

  std::vector<Mat> grad_sum(L + 1);
  for (int l = 1; l <= L; ++l)
    grad_sum[l] = Mat::Zero(spec.layer_dims[l - 1], spec.layer_dims[l]);
  std::vector<Mat> psi_sum, zeta_sum;
  if (relaxed && opts.relax->use_psi) {
    psi_sum.resize(L + 1);
    for (int l = 1; l <= L; ++l)
      psi_sum[l] = Mat::Zero(spec.layer_dims[l], spec.layer_dims[l - 1]);
  }
  if (relaxed && opts.relax->use_zeta) {
    zeta_sum.resize(L);
    for (int l = 0; l < L; ++l)
      zeta_sum[l] = Mat::Zero(spec.layer_dims[l], spec.layer_dims[l]);
  }

  std::vector<NetworkState> states;
  states.reserve(batch.inputs.size());
  double iter_sum = 0.0;
  for (size_t i = 0; i < batch.inputs.size(); ++i) {
    NetworkState s = NetworkState::zeros(spec);
    std::optional<Vec> label;
    if (batch.labels) label = (*batch.labels)[i];
    apply_clamps(mode, batch.inputs[i], label, s, spec);
    initialize_latents(s, params, spec, rng);
    iter_sum += run_inference_flags(s, params, spec, opts.relax).iterations;

    if (relaxed) {
      auto g = relaxed_weight_gradients(s, params, spec, *opts.relax);
      for (int l = 1; l <= L; ++l) grad_sum[l] += g[l];
      auto eps = relaxed_errors(s, params, spec, *opts.relax);
      if (opts.relax->use_psi)
        for (int l = 1; l <= L; ++l) {
          Mat psi_grad = Mat::Zero(psi_sum[l].rows(), psi_sum[l].cols());
          psi_step(psi_grad, s.mu[l], eps[l - 1], params.precision[l - 1],
                   params.theta[l], spec.activation[l - 1],
                   opts.relax->drop_derivative, 1.0);
          psi_sum[l] += psi_grad;
        }
      if (opts.relax->use_zeta)
        for (int l = 0; l < L; ++l) {
          Vec pred = activate(spec.activation[l],
                              params.theta[l + 1] * s.mu[l + 1]);
          zeta_sum[l] += zeta_gradient(eps[l], params.precision[l], pred);
        }
    } else {
      auto g = weight_gradients(s, params, spec);
      for (int l = 1; l <= L; ++l) grad_sum[l] += g[l];
    }
    states.push_back(std::move(s));
  }

  const double inv_n = 1.0 / static_cast<double>(batch.inputs.size());
  for (int l = 1; l <= L; ++l) {
    Mat dir = grad_sum[l] * inv_n;
    if (opts.em.weight_decay > 0.0)
      dir -= 2.0 * opts.em.weight_decay * params.theta[l];
    params.theta[l] += spec.weight_step_size * dir;
  }
  if (relaxed && opts.relax->use_psi)
    for (int l = 1; l <= L; ++l)
      opts.relax->psi[l] += spec.weight_step_size * psi_sum[l] * inv_n;
  if (relaxed && opts.relax->use_zeta)
    for (int l = 0; l < L; ++l)
      opts.relax->zeta[l] += spec.weight_step_size * zeta_sum[l] * inv_n;

  EmResult res;
  for (const NetworkState& s : states)
    res.mean_free_energy +=
        relaxed ? relaxed_free_energy(s, params, spec, *opts.relax)
                : free_energy(s, params, spec);
  res.mean_free_energy *= inv_n;
  res.mean_iterations = iter_sum * inv_n;
  return res;
}

Vec downward_sweep(const Vec& top, const NetworkParams& params,
                   const NetworkSpec& spec) {
  const int L = spec.levels();
  require(top.size() == spec.layer_dims[L], "top layer dimension mismatch");
  Vec v = top;
  for (int l = L - 1; l >= 0; --l)
    v = activate(spec.activation[l], params.theta[l + 1] * v);
  return v;
}

int classify(const Vec& item, const NetworkParams& params,
             const NetworkSpec& spec, ClampMode mode, Rng& rng,
             const RelaxationFlags* flags) {
  const int L = spec.levels();
  switch (mode) {
    case ClampMode::supervised_forward: {
      NetworkState s = NetworkState::zeros(spec);
      require(item.size() == spec.layer_dims[0], "item dimension mismatch");
      s.mu[0] = item;
      s.clamped[0] = true;
      initialize_latents(s, params, spec, rng);
      run_inference_flags(s, params, spec, flags);
      return argmax_lowest(s.mu[L]);
    }
    case ClampMode::supervised_backward:
      // The label layer sits at the bottom: a single downward prediction
      // sweep from the clamped data yields the label estimate.
      return argmax_lowest(downward_sweep(item, params, spec));
    case ClampMode::unsupervised:
      throw UnsupportedConfiguration("classify requires a supervised mode");
  }
  throw StructuralError("unknown clamp mode");
}

Vec generate(const Vec& label, const NetworkParams& params,
             const NetworkSpec& spec, ClampMode mode, Rng& rng,
             const RelaxationFlags* flags) {
  const int L = spec.levels();
  switch (mode) {
    case ClampMode::supervised_forward:
      return downward_sweep(label, params, spec);
    case ClampMode::supervised_backward: {
      NetworkState s = NetworkState::zeros(spec);
      require(label.size() == spec.layer_dims[0], "label dimension mismatch");
      s.mu[0] = label;
      s.clamped[0] = true;
      initialize_latents(s, params, spec, rng);
      run_inference_flags(s, params, spec, flags);
      return s.mu[L];
    }
    case ClampMode::unsupervised:
      throw UnsupportedConfiguration("generate requires a supervised mode");
  }
  throw StructuralError("unknown clamp mode");
}

double evaluate_accuracy(const std::vector<Vec>& items,
                         const std::vector<int>& label_indices,
                         const NetworkParams& params, const NetworkSpec& spec,
                         ClampMode mode, Rng& rng,
                         const RelaxationFlags* flags) {
  require(items.size() == label_indices.size(),
          "need one label index per item");
  require(!items.empty(), "empty evaluation set");
  int correct = 0;
  for (size_t i = 0; i < items.size(); ++i)
    if (classify(items[i], params, spec, mode, rng, flags) == label_indices[i])
      ++correct;
  return static_cast<double>(correct) / static_cast<double>(items.size());
}

}  // namespace pcn
