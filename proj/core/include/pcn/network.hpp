#pragma once

#include <optional>
#include <vector>

#include "pcn/activation.hpp"
#include "pcn/common.hpp"

namespace pcn {

// Hierarchical Gaussian generative model with L+1 layers of value units.
// Layer 0 holds the observation, layer L the deepest latent. theta[l]
// (l = 1..L, shape d_{l-1} x d_l) maps layer-l activity to the prediction
// of layer l-1:  pred_{l-1} = f_{l-1}(theta[l] * mu[l]).
// Per-layer errors:
//   eps[l] = mu[l] - pred[l]          for l < L
//   eps[L] = mu[L] - prior_mean.
struct NetworkSpec {
  std::vector<int> layer_dims;               // d_0 .. d_L
  std::vector<ActivationKind> activation;    // f_l for l = 0 .. L-1
  Vec prior_mean;                            // length d_L
  double step_size = 0.05;                   // eta for value dynamics
  double weight_step_size = 0.01;            // eta for weight dynamics
  int max_iters = 500;
  double tol = 1e-6;
  bool warm_start = true;  // feedforward-style init of unclamped layers

  int levels() const { return static_cast<int>(layer_dims.size()) - 1; }
  void validate() const;
};

struct NetworkParams {
  std::vector<Mat> theta;      // theta[0] unused; theta[l] is d_{l-1} x d_l
  std::vector<Mat> precision;  // Sigma^{-1}_l, l = 0..L, each d_l x d_l

  void validate(const NetworkSpec& spec) const;
  static NetworkParams make(const NetworkSpec& spec, Rng& rng,
                            double weight_scale = 0.1);
};

struct NetworkState {
  std::vector<Vec> mu;       // value units, l = 0..L
  std::vector<Vec> eps;      // error units, recomputable cache
  std::vector<bool> clamped; // clamped layers are skipped by infer_step

  static NetworkState zeros(const NetworkSpec& spec);
};

// Pure error evaluation from mu; does not touch the state cache.
std::vector<Vec> evaluate_errors(const NetworkState& state,
                                 const NetworkParams& params,
                                 const NetworkSpec& spec);

// Refreshes state.eps from state.mu.
void compute_errors(NetworkState& state, const NetworkParams& params,
                    const NetworkSpec& spec);

// F = sum_l eps_l' Sigma_l^{-1} eps_l + ln det(2 pi Sigma_l), summed over
// l = 0..L (the observation-layer term is included).
double free_energy(const NetworkState& state, const NetworkParams& params,
                   const NetworkSpec& spec);

// Local update kernel for one unclamped layer; the flow descends F with the
// conventional half factor absorbed into the rate (step = -1/2 dF/dmu_l).
// below-term arguments are empty for the observation layer.
Vec mu_update_direction(const NetworkState& state, const NetworkParams& params,
                        const NetworkSpec& spec, int layer);

// One Euler step on every unclamped layer; eps recomputed afterwards.
void infer_step(NetworkState& state, const NetworkParams& params,
                const NetworkSpec& spec);

struct InferenceResult {
  int iterations = 0;
  double final_free_energy = 0.0;
};

// Iterates infer_step until the max-norm of the total mu change drops below
// spec.tol or spec.max_iters is reached. Throws DivergenceError naming the
// first layer whose values left the finite range.
InferenceResult run_inference(NetworkState& state, const NetworkParams& params,
                              const NetworkSpec& spec);

// Hebbian weight kernel: sees only the quantities that are local to the
// connection (error and precision of the layer below, value above, weights).
Mat theta_update_direction(const Vec& eps_below, const Mat& prec_below,
                           const Vec& mu_l, const Mat& theta_l,
                           ActivationKind act_below);

// Descent directions for every theta[l], l = 1..L.
std::vector<Mat> weight_gradients(const NetworkState& state,
                                  const NetworkParams& params,
                                  const NetworkSpec& spec);

// theta[l] += weight_step_size * direction (one M-step).
void weight_step(NetworkState& state, NetworkParams& params,
                 const NetworkSpec& spec);

// Initializes unclamped layers: feedforward sweep mu_{l+1} = theta'_{l+1} mu_l
// when warm_start is set, small Gaussian values otherwise.
void initialize_latents(NetworkState& state, const NetworkParams& params,
                        const NetworkSpec& spec, Rng& rng);

struct EmOptions {
  double weight_decay = 0.0;  // adds 2*lambda*theta to the weight gradient
};

struct EmResult {
  double mean_free_energy = 0.0;  // after the weight update
  double mean_iterations = 0.0;
};

// One EM pass over a batch of observations: clamp mu_0 to each item, relax
// the latents (E-step), accumulate weight gradients, then apply one averaged
// weight update (M-step).
EmResult em_epoch(const std::vector<Vec>& batch, NetworkParams& params,
                  const NetworkSpec& spec, Rng& rng,
                  const EmOptions& opts = {});

// mu_{t+1} = alpha mu + beta theta1'(o - theta1 mu) + gamma theta2 mu_bar.
Vec biased_competition_step(const Vec& mu, const Vec& mu_bar, const Vec& o,
                            const Mat& theta1, const Mat& theta2, double alpha,
                            double beta, double gamma);

// Free energy evaluated through the Gaussian variational route: the
// second-order expansion in the variational variances, evaluated at the
// optimal per-layer variance (the inverse curvature of the layer's negative
// log-density). Entropy and trace constants cancel exactly at the optimum,
// so the value coincides with free_energy on linear models. Requires all
// activations to be identity.
double laplace_free_energy(const NetworkState& state,
                           const NetworkParams& params,
                           const NetworkSpec& spec);

// Optimal variational covariance of layer l: inverse of the curvature of the
// layer's negative log-density with respect to mu_l, i.e. Sigma_l.
Mat optimal_variational_variance(const NetworkParams& params,
                                 const NetworkSpec& spec, int layer);

}  // namespace pcn
