#pragma once

#include <vector>

#include "pcn/common.hpp"

namespace pcn {

enum class PrecisionMode { fixed, diagonal_learned, full_learned };

PrecisionMode precision_mode_from_string(const std::string& name);
std::string to_string(PrecisionMode m);

// One Euler step of the variance flow dSigma/dt = e~ e~' - Sigma with
// e~ = Sigma^{-1} eps; the result is symmetrized and its eigenvalues floored
// at 1e-8 so Sigma stays usable as a covariance.
Mat precision_step(const Mat& sigma, const Vec& eps, double eta_sigma);

// Same flow restricted to the diagonal (elementwise), for large layers.
Vec precision_step_diagonal(const Vec& sigma_diag, const Vec& eps,
                            double eta_sigma);

// || mean over samples of (Sigma^{-1} eps)(Sigma^{-1} eps)' - Sigma ||_maxabs.
// Small when Sigma sits at the flow's fixed point for a stationary error
// stream. Requires at least 100 samples.
double empirical_fixed_point_check(const std::vector<Vec>& error_samples,
                                   const Mat& sigma);

// Exact descent direction of the per-layer objective
// eps' Sigma^{-1} eps + ln det Sigma with respect to Sigma^{-1}:
// dF/dSigma^{-1} = eps eps' - Sigma. Used to cross-check the flow above
// against finite differences of the objective.
Mat variance_gradient(const Mat& sigma, const Vec& eps);

// Curvature check for the value units: numerically differentiates the
// single-layer quadratic term (mu - theta mu_above)' prec (mu - theta
// mu_above) twice in mu and returns maxabs(H/2 - prec). Linear maps only.
double fisher_check_mu(const Mat& prec, const Mat& theta, const Vec& mu_above,
                       const Vec& mu);

// Curvature check for the weights: Monte-Carlo expectation over activity
// samples of the Hessian of the same term in vec(theta), compared against
// the Kronecker structure prec (x) E[mu mu']. Returns maxabs deviation of
// the halved numeric Hessian from that structure.
double fisher_check_theta(const Mat& prec, const Mat& theta,
                          const std::vector<Vec>& activity_samples);

}  // namespace pcn
