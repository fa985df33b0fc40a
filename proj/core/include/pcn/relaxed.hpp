#pragma once

#include "pcn/network.hpp"

namespace pcn {

// Plausibility relaxations of the standard update rules: learnable backward
// weights psi (replacing the transpose of theta), dropped activation
// derivatives, and learnable error connectivity zeta.
struct RelaxationFlags {
  bool use_psi = false;
  bool drop_derivative = false;
  bool use_zeta = false;
  std::vector<Mat> psi;   // psi[l] is d_l x d_{l-1}, l = 1..L (slot 0 unused)
  std::vector<Mat> zeta;  // zeta[l] is d_l x d_l, l = 0..L-1

  void validate(const NetworkSpec& spec) const;
  // Allocates psi/zeta for the set flags: psi uniform in [-0.05, 0.05],
  // zeta at the identity.
  static RelaxationFlags make(const NetworkSpec& spec, bool use_psi,
                              bool drop_derivative, bool use_zeta, Rng& rng);
};

// Errors with the zeta connectivity: eps_l = mu_l - zeta_l f(theta mu_{l+1})
// for l < L (standard error when use_zeta is off).
std::vector<Vec> relaxed_errors(const NetworkState& state,
                                const NetworkParams& params,
                                const NetworkSpec& spec,
                                const RelaxationFlags& flags);

// One Euler step on every unclamped layer using the selected relaxed rule:
// the backward path is psi_l (when use_psi) or theta_l', and the activation
// derivative gate is omitted when drop_derivative is set.
void relaxed_infer_step(NetworkState& state, const NetworkParams& params,
                        const NetworkSpec& spec, const RelaxationFlags& flags);

// Hebbian update of the backward weights:
// psi_l += eta * mu_l (gate .* prec_below eps_below)', where the gate is
// f'(theta_l mu_l) unless drop_derivative is set.
void psi_step(Mat& psi_l, const Vec& mu_l, const Vec& eps_below,
              const Mat& prec_below, const Mat& theta_l,
              ActivationKind act_below, bool drop_derivative, double eta);

// eps_l = mu_l - zeta_l * prediction.
Vec zeta_error(const Vec& mu_l, const Vec& prediction, const Mat& zeta_l);

// Literal Hebbian rule for the error connectivity: zeta += eta * mu eps'.
void zeta_step(Mat& zeta_l, const Vec& mu_l, const Vec& eps_l, double eta);

// Exact descent direction of F in zeta_l (the literal rule above is an
// approximation): dF/dzeta_l = -2 prec_l eps_l prediction'. Returned with
// the descent orientation and the half factor absorbed, i.e.
// prec_l eps_l prediction'.
Mat zeta_gradient(const Vec& eps_l, const Mat& prec_l, const Vec& prediction);

}  // namespace pcn
