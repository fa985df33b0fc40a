#pragma once

#include <vector>

#include "pcn/common.hpp"

namespace pcn {

// Truncated stack of temporal-derivative coordinates [mu, mu', mu'', ...].
struct GeneralizedState {
  std::vector<Vec> orders;  // orders[k] = k-th derivative estimate

  int depth() const { return static_cast<int>(orders.size()); }
  int dim() const { return orders.empty() ? 0 : int(orders[0].size()); }
  static GeneralizedState zeros(int depth, int dim);
  void validate() const;
};

// Shift operator: maps each order to the one above and zero-pads the top,
// D [mu, mu', ..., mu^(K)] = [mu', ..., mu^(K), 0].
GeneralizedState shift(const GeneralizedState& gen);

// Locally linear model shared across orders:
//   observations  o^(k) = J mu^(k) + noise        (precision obs_prec[k])
//   dynamics      mu^(k+1) = G (mu^(k) - mu_bar[k]) + noise
//                                                  (precision dyn_prec[k])
// Precisions may be zero matrices to switch a term off; mu^(K) beyond the
// truncation is treated as zero.
struct GeneralizedModel {
  Mat J;                      // obs_dim x dim
  Mat G;                      // dim x dim
  std::vector<Vec> mu_bar;    // setpoint per order
  std::vector<Mat> obs_prec;  // per order, obs_dim x obs_dim
  std::vector<Mat> dyn_prec;  // per order, dim x dim

  void validate(int depth, int dim) const;
};

struct GeneralizedErrors {
  std::vector<Vec> obs;  // eps_o^(k) = o^(k) - J mu^(k)
  std::vector<Vec> dyn;  // eps_x^(k) = mu^(k+1) - G (mu^(k) - mu_bar[k])
};

GeneralizedErrors generalized_errors(const GeneralizedState& gen,
                                     const GeneralizedModel& model,
                                     const std::vector<Vec>& obs_orders);

// One Euler step of the generalized flow: the shift term supplies the prior
// motion and the precision-weighted errors supply the forces,
//   dmu^(k)/dt = mu^(k+1) + J' P_o^k eps_o^(k) + G' P_x^k eps_x^(k)
//                - P_x^{k-1} eps_x^(k-1).
void generalized_step(GeneralizedState& gen, const GeneralizedModel& model,
                      const std::vector<Vec>& obs_orders, double eta);

// Action selection: the forward model do/da and precisions shape how the
// observation error is pushed back onto the action.
struct ActionConfig {
  Mat forward_model;  // do/da, obs_dim x action_dim
  Vec action_prior;   // a_bar (defaults to zero when empty)
  Mat action_prec;    // Sigma_a^{-1}; zero or empty disables the cost term
  double step_size = 0.01;
};

// da/dt = -(do/da)' P_o (o - setpoint).
Vec action_step(const Vec& o, const Vec& setpoint, const ActionConfig& cfg,
                const Mat& obs_prec);

// Adds the action cost: da/dt = -(do/da)' P_o (o - setpoint)
//                               - P_a (a - a_bar).
Vec action_step_with_cost(const Vec& o, const Vec& setpoint, const Vec& a,
                          const ActionConfig& cfg, const Mat& obs_prec);

// Discrete PID on an error history: proportional on the last sample,
// trapezoidal integral (with an implicit zero sample before the history),
// backward-difference derivative. Needs >= 2 samples; dt must be positive.
double pid_reference(const std::vector<double>& error_history, double k_p,
                     double k_i, double k_d, double dt);

// Velocity-form (derivative) PID: accumulates
//   da = -(k_i e + k_p e' + k_d e'') dt
// with e', e'' backward finite differences of the error stream.
std::vector<double> pid_derivative_control(const std::vector<double>& obs,
                                           double setpoint, double k_p,
                                           double k_i, double k_d, double dt);

// First-order active-inference controller with identity generative and
// forward models over three temporal orders: integrates
//   da/dt = -(p0 e + p1 e' + p2 e'')
// where e = o - setpoint and primes are backward finite differences.
// With (k_i, k_p, k_d) = (p0, p1, p2) this is the same arithmetic as
// pid_derivative_control.
std::vector<double> pc_pid_controller(const std::vector<double>& obs,
                                      double setpoint, const Vec& order_precs,
                                      double dt);

// 1-D plant o' = a + disturbance, advanced in lockstep with a controller
// callback a(t) -> next action value given the observation history so far.
struct PlantTrace {
  std::vector<double> t;
  std::vector<double> o;
  std::vector<double> a;
};

// Gaussian white noise smoothed with a Gaussian kernel of the given width
// (in samples); width 0 returns the white noise itself.
std::vector<double> colored_noise(Rng& rng, int n, double stddev,
                                  double width);

}  // namespace pcn
