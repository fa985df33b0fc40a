#include "pcn/network.hpp"

#include <cmath>
#include <string>

namespace pcn {
namespace {

double log_det_2pi_sigma(const Mat& precision) {
  // ln det(2 pi Sigma) = d ln(2 pi) - ln det(Sigma^{-1})
  Eigen::LLT<Mat> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("precision matrix is not positive definite");
  double log_det_prec = 0.0;
  const auto& l = llt.matrixL();
  for (Eigen::Index i = 0; i < precision.rows(); ++i)
    log_det_prec += 2.0 * std::log(l(i, i));
  return precision.rows() * std::log(2.0 * M_PI) - log_det_prec;
}

}  // namespace

void NetworkSpec::validate() const {
  require(layer_dims.size() >= 2, "need at least one latent layer (L >= 1)");
  for (int d : layer_dims) require(d >= 1, "layer dimensions must be >= 1");
  require(static_cast<int>(activation.size()) == levels(),
          "need one activation per predicted layer (L entries)");
  require(prior_mean.size() == layer_dims.back(),
          "prior mean length must equal the top layer dimension");
  require(step_size > 0.0, "step size must be positive");
  require(weight_step_size > 0.0, "weight step size must be positive");
  require(tol > 0.0, "tolerance must be positive");
  require(max_iters >= 1, "max_iters must be >= 1");
}

void NetworkParams::validate(const NetworkSpec& spec) const {
  const int L = spec.levels();
  require(static_cast<int>(theta.size()) == L + 1, "theta must have L+1 slots");
  require(static_cast<int>(precision.size()) == L + 1,
          "precision must have L+1 entries");
  for (int l = 1; l <= L; ++l) {
    require(theta[l].rows() == spec.layer_dims[l - 1] &&
                theta[l].cols() == spec.layer_dims[l],
            "theta[" + std::to_string(l) + "] shape mismatch");
  }
  for (int l = 0; l <= L; ++l) {
    const Mat& p = precision[l];
    require(p.rows() == spec.layer_dims[l] && p.cols() == spec.layer_dims[l],
            "precision[" + std::to_string(l) + "] shape mismatch");
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw std::domain_error("precision[" + std::to_string(l) +
                              "] is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(p, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::domain_error("precision[" + std::to_string(l) +
                              "] is not positive definite");
  }
}

NetworkParams NetworkParams::make(const NetworkSpec& spec, Rng& rng,
                                  double weight_scale) {
  const int L = spec.levels();
  NetworkParams p;
  p.theta.resize(L + 1);
  p.precision.resize(L + 1);
  for (int l = 1; l <= L; ++l)
    p.theta[l] =
        gaussian_matrix(rng, spec.layer_dims[l - 1], spec.layer_dims[l],
                        weight_scale);
  for (int l = 0; l <= L; ++l)
    p.precision[l] = Mat::Identity(spec.layer_dims[l], spec.layer_dims[l]);
  return p;
}

NetworkState NetworkState::zeros(const NetworkSpec& spec) {
  NetworkState s;
  const int L = spec.levels();
  s.mu.resize(L + 1);
  s.eps.resize(L + 1);
  s.clamped.assign(L + 1, false);
  for (int l = 0; l <= L; ++l) {
    s.mu[l] = Vec::Zero(spec.layer_dims[l]);
    s.eps[l] = Vec::Zero(spec.layer_dims[l]);
  }
  return s;
}

std::vector<Vec> evaluate_errors(const NetworkState& state,
                                 const NetworkParams& params,
                                 const NetworkSpec& spec) {
  const int L = spec.levels();
  require(static_cast<int>(state.mu.size()) == L + 1, "state layer count");
  for (int l = 0; l <= L; ++l)
    require(state.mu[l].size() == spec.layer_dims[l],
            "mu[" + std::to_string(l) + "] dimension mismatch");
  std::vector<Vec> eps(L + 1);
  for (int l = 0; l < L; ++l)
    eps[l] = state.mu[l] -
             activate(spec.activation[l], params.theta[l + 1] * state.mu[l + 1]);
  eps[L] = state.mu[L] - spec.prior_mean;
  return eps;
}

void compute_errors(NetworkState& state, const NetworkParams& params,
                    const NetworkSpec& spec) {
  state.eps = evaluate_errors(state, params, spec);
}

double free_energy(const NetworkState& state, const NetworkParams& params,
                   const NetworkSpec& spec) {
  auto eps = evaluate_errors(state, params, spec);
  double f = 0.0;
  for (int l = 0; l <= spec.levels(); ++l) {
    f += eps[l].dot(params.precision[l] * eps[l]);
    f += log_det_2pi_sigma(params.precision[l]);
  }
  return f;
}

Vec mu_update_direction(const NetworkState& state, const NetworkParams& params,
                        const NetworkSpec& spec, int layer) {
  const int L = spec.levels();
  Vec dir = -(params.precision[layer] * state.eps[layer]);
  if (layer > 0) {
    // pull from the error of the layer below, gated by f' at the prediction
    const Vec pre = params.theta[layer] * state.mu[layer];
    const Vec gate = activate_prime(spec.activation[layer - 1], pre);
    const Vec weighted = params.precision[layer - 1] * state.eps[layer - 1];
    dir += params.theta[layer].transpose() * gate.cwiseProduct(weighted);
  }
  (void)L;
  return dir;
}

void infer_step(NetworkState& state, const NetworkParams& params,
                const NetworkSpec& spec) {
  const int L = spec.levels();
  std::vector<Vec> updates(L + 1);
  for (int l = 0; l <= L; ++l) {
    if (state.clamped[l]) continue;
    updates[l] = mu_update_direction(state, params, spec, l);
  }
  for (int l = 0; l <= L; ++l) {
    if (state.clamped[l]) continue;
    state.mu[l] += spec.step_size * updates[l];
  }
  compute_errors(state, params, spec);
}

InferenceResult run_inference(NetworkState& state, const NetworkParams& params,
                              const NetworkSpec& spec) {
  const int L = spec.levels();
  compute_errors(state, params, spec);
  InferenceResult res;
  for (int it = 1; it <= spec.max_iters; ++it) {
    std::vector<Vec> before = state.mu;
    infer_step(state, params, spec);
    res.iterations = it;
    double max_change = 0.0;
    for (int l = 0; l <= L; ++l) {
      if (!state.mu[l].allFinite())
        throw DivergenceError("inference diverged at layer " +
                              std::to_string(l) + " (iteration " +
                              std::to_string(it) + ")");
      if (!state.clamped[l])
        max_change =
            std::max(max_change, (state.mu[l] - before[l]).cwiseAbs().maxCoeff());
    }
    if (max_change < spec.tol) break;
  }
  res.final_free_energy = free_energy(state, params, spec);
  if (!std::isfinite(res.final_free_energy))
    throw DivergenceError("non-finite free energy after inference");
  return res;
}

Mat theta_update_direction(const Vec& eps_below, const Mat& prec_below,
                           const Vec& mu_l, const Mat& theta_l,
                           ActivationKind act_below) {
  const Vec pre = theta_l * mu_l;
  const Vec gate = activate_prime(act_below, pre);
  const Vec weighted = prec_below * eps_below;
  return gate.cwiseProduct(weighted) * mu_l.transpose();
}

std::vector<Mat> weight_gradients(const NetworkState& state,
                                  const NetworkParams& params,
                                  const NetworkSpec& spec) {
  const int L = spec.levels();
  std::vector<Mat> g(L + 1);
  for (int l = 1; l <= L; ++l)
    g[l] = theta_update_direction(state.eps[l - 1], params.precision[l - 1],
                                  state.mu[l], params.theta[l],
                                  spec.activation[l - 1]);
  return g;
}

void weight_step(NetworkState& state, NetworkParams& params,
                 const NetworkSpec& spec) {
  compute_errors(state, params, spec);
  auto g = weight_gradients(state, params, spec);
  for (int l = 1; l <= spec.levels(); ++l)
    params.theta[l] += spec.weight_step_size * g[l];
}

void initialize_latents(NetworkState& state, const NetworkParams& params,
                        const NetworkSpec& spec, Rng& rng) {
  const int L = spec.levels();
  for (int l = 1; l <= L; ++l) {
    if (state.clamped[l]) continue;
    if (spec.warm_start)
      state.mu[l] = params.theta[l].transpose() * state.mu[l - 1];
    else
      state.mu[l] = gaussian_vector(rng, spec.layer_dims[l], 0.05);
  }
}

EmResult em_epoch(const std::vector<Vec>& batch, NetworkParams& params,
                  const NetworkSpec& spec, Rng& rng, const EmOptions& opts) {
  require(!batch.empty(), "em_epoch: empty batch");
  const int L = spec.levels();
  std::vector<Mat> grad_sum(L + 1);
  for (int l = 1; l <= L; ++l)
    grad_sum[l] = Mat::Zero(spec.layer_dims[l - 1], spec.layer_dims[l]);

  std::vector<NetworkState> converged;
  converged.reserve(batch.size());
  double iter_sum = 0.0;
  for (const Vec& o : batch) {
    require(o.size() == spec.layer_dims[0], "observation dimension mismatch");
    NetworkState s = NetworkState::zeros(spec);
    s.mu[0] = o;
    s.clamped[0] = true;
    initialize_latents(s, params, spec, rng);
    iter_sum += run_inference(s, params, spec).iterations;
    auto g = weight_gradients(s, params, spec);
    for (int l = 1; l <= L; ++l) grad_sum[l] += g[l];
    converged.push_back(std::move(s));
  }

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (int l = 1; l <= L; ++l) {
    Mat dir = grad_sum[l] * inv_n;
    if (opts.weight_decay > 0.0) dir -= 2.0 * opts.weight_decay * params.theta[l];
    params.theta[l] += spec.weight_step_size * dir;
  }

  EmResult res;
  for (const NetworkState& s : converged)
    res.mean_free_energy += free_energy(s, params, spec);
  res.mean_free_energy *= inv_n;
  res.mean_iterations = iter_sum * inv_n;
  return res;
}

Vec biased_competition_step(const Vec& mu, const Vec& mu_bar, const Vec& o,
                            const Mat& theta1, const Mat& theta2, double alpha,
                            double beta, double gamma) {
  require(theta1.cols() == mu.size() && theta1.rows() == o.size(),
          "biased competition: theta1 shape mismatch");
  require(theta2.cols() == mu_bar.size() && theta2.rows() == mu.size(),
          "biased competition: theta2 shape mismatch");
  return alpha * mu + beta * (theta1.transpose() * (o - theta1 * mu)) +
         gamma * (theta2 * mu_bar);
}

Mat optimal_variational_variance(const NetworkParams& params,
                                 const NetworkSpec& spec, int layer) {
  require(layer >= 0 && layer <= spec.levels(), "layer out of range");
  // Curvature of the layer's negative log-density w.r.t. its own value is
  // Sigma^{-1}; the optimal variational covariance is its inverse.
  return params.precision[layer].inverse();
}

double laplace_free_energy(const NetworkState& state,
                           const NetworkParams& params,
                           const NetworkSpec& spec) {
  for (ActivationKind a : spec.activation)
    if (a != ActivationKind::identity)
      throw UnsupportedConfiguration(
          "laplace_free_energy requires identity activations");
  auto eps = evaluate_errors(state, params, spec);
  double f = 0.0;
  for (int l = 0; l <= spec.levels(); ++l) {
    const Mat& prec = params.precision[l];
    const Mat sigma = optimal_variational_variance(params, spec, l);
    const double d = static_cast<double>(prec.rows());
    // energy at the mode
    f += eps[l].dot(prec * eps[l]) + log_det_2pi_sigma(prec);
    // curvature correction of the expansion, minus its value at the optimum
    f += (prec * sigma).trace() - d;
    // entropy relative to the optimal variance
    f -= std::log((prec * sigma).determinant());
  }
  return f;
}

}  // namespace pcn
