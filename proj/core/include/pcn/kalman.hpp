#pragma once

#include <string>
#include <vector>

#include "pcn/common.hpp"

namespace pcn {

// Linear-Gaussian state space:
//   x_{t+1} = A x_t + B u_t + w,  w ~ N(0, Sigma1)
//   o_t     = C x_t + z,          z ~ N(0, Sigma2)
struct LinearStateSpace {
  Mat A;       // n x n dynamics
  Mat B;       // n x m control
  Mat C;       // p x n observation
  Mat sigma1;  // n x n process covariance
  Mat sigma2;  // p x p observation covariance

  int state_dim() const { return static_cast<int>(A.rows()); }
  int control_dim() const { return static_cast<int>(B.cols()); }
  int obs_dim() const { return static_cast<int>(C.rows()); }
  void validate() const;
};

struct BeliefState {
  Vec mean;
  Mat cov;
};

// Prediction through the dynamics: mean = A mu + B u, cov = A S A' + Sigma1.
BeliefState kf_project(const BeliefState& belief, const Vec& u,
                       const LinearStateSpace& model);

// Measurement update: K = S C' (C S C' + Sigma2)^{-1},
// mean += K (o - C mean), cov = (I - K C) S.
BeliefState kf_correct(const BeliefState& predicted, const Vec& o,
                       const LinearStateSpace& model);

// Largest admissible step size is 2 / lambda_max of the MAP objective's
// Hessian C' Sigma2^{-1} C + prior_prec; used to police eta eagerly.
double pc_step_bound(const Mat& C, const Mat& sigma2, const Mat& prior_prec);

// Gradient iteration for the MAP state under a Gaussian prior
// N(prior_mean, prior_cov) and likelihood N(C mu, sigma2):
//   mu <- mu - eta [ -C' Sigma2^{-1}(o - C mu) + prior_cov^{-1}(mu - prior_mean) ]
// Throws std::invalid_argument when eta is at or above the stability bound,
// DivergenceError (naming the iteration) if values leave the finite range.
Vec pc_map_solve(const Vec& prior_mean, const Mat& prior_cov, const Vec& o,
                 const Mat& C, const Mat& sigma2, double eta, int iters);

// Single-step filtering posed as the iterative scheme above with prior mean
// A mu_prev + B u and prior covariance Sigma1.
Vec pc_linear_solve(const Vec& prev_mean, const Vec& u, const Vec& o,
                    const LinearStateSpace& model, double eta, int iters);

// Hebbian system identification: with eps_x = mu_next - A mu - B u and
// eps_o = o - C mu_next,
//   A += eta Sigma1^{-1} eps_x mu', B += eta Sigma1^{-1} eps_x u',
//   C += eta Sigma2^{-1} eps_o mu_next'.
void learn_ssm_step(const Vec& mu_next, const Vec& mu, const Vec& u,
                    const Vec& o, LinearStateSpace& model, double eta);

// One simulated step of the generative model (process + observation noise).
struct TrajectoryStep {
  Vec u;
  Vec o;
};

// Whitespace-delimited trajectory text: one step per row, u columns then o
// columns. Column counts are taken from the given dimensions.
std::vector<TrajectoryStep> read_trajectory(const std::string& path,
                                            int control_dim, int obs_dim);
void write_trajectory(const std::string& path,
                      const std::vector<TrajectoryStep>& steps);

}  // namespace pcn
