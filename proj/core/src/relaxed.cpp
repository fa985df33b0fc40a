#include "pcn/relaxed.hpp"

namespace pcn {

void RelaxationFlags::validate(const NetworkSpec& spec) const {
  const int L = spec.levels();
  if (use_psi) {
    require(static_cast<int>(psi.size()) == L + 1,
            "psi must have L+1 slots when use_psi is set");
    for (int l = 1; l <= L; ++l)
      require(psi[l].rows() == spec.layer_dims[l] &&
                  psi[l].cols() == spec.layer_dims[l - 1],
              "psi[" + std::to_string(l) + "] shape mismatch");
  } else {
    require(psi.empty(), "psi allocated without use_psi");
  }
  if (use_zeta) {
    require(static_cast<int>(zeta.size()) == L,
            "zeta must have L entries when use_zeta is set");
    for (int l = 0; l < L; ++l)
      require(zeta[l].rows() == spec.layer_dims[l] &&
                  zeta[l].cols() == spec.layer_dims[l],
              "zeta[" + std::to_string(l) + "] shape mismatch");
  } else {
    require(zeta.empty(), "zeta allocated without use_zeta");
  }
}

RelaxationFlags RelaxationFlags::make(const NetworkSpec& spec, bool use_psi,
                                      bool drop_derivative, bool use_zeta,
                                      Rng& rng) {
  RelaxationFlags f;
  f.use_psi = use_psi;
  f.drop_derivative = drop_derivative;
  f.use_zeta = use_zeta;
  const int L = spec.levels();
  if (use_psi) {
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    f.psi.resize(L + 1);
    for (int l = 1; l <= L; ++l) {
      f.psi[l].resize(spec.layer_dims[l], spec.layer_dims[l - 1]);
      for (Eigen::Index j = 0; j < f.psi[l].cols(); ++j)
        for (Eigen::Index i = 0; i < f.psi[l].rows(); ++i)
          f.psi[l](i, j) = u(rng);
    }
  }
  if (use_zeta) {
    f.zeta.resize(L);
    for (int l = 0; l < L; ++l)
      f.zeta[l] = Mat::Identity(spec.layer_dims[l], spec.layer_dims[l]);
  }
  return f;
}

std::vector<Vec> relaxed_errors(const NetworkState& state,
                                const NetworkParams& params,
                                const NetworkSpec& spec,
                                const RelaxationFlags& flags) {
  const int L = spec.levels();
  std::vector<Vec> eps(L + 1);
  for (int l = 0; l < L; ++l) {
    Vec pred =
        activate(spec.activation[l], params.theta[l + 1] * state.mu[l + 1]);
    if (flags.use_zeta) pred = flags.zeta[l] * pred;
    eps[l] = state.mu[l] - pred;
  }
  eps[L] = state.mu[L] - spec.prior_mean;
  return eps;
}

void relaxed_infer_step(NetworkState& state, const NetworkParams& params,
                        const NetworkSpec& spec,
                        const RelaxationFlags& flags) {
  const int L = spec.levels();
  state.eps = relaxed_errors(state, params, spec, flags);
  std::vector<Vec> updates(L + 1);
  for (int l = 0; l <= L; ++l) {
    if (state.clamped[l]) continue;
    Vec dir = -(params.precision[l] * state.eps[l]);
    if (l > 0) {
      Vec weighted = params.precision[l - 1] * state.eps[l - 1];
      // The backward-weight variant follows the derivative-free relaxed
      // rule; otherwise the gate is kept unless explicitly dropped.
      if (!flags.use_psi && !flags.drop_derivative) {
        const Vec pre = params.theta[l] * state.mu[l];
        weighted =
            activate_prime(spec.activation[l - 1], pre).cwiseProduct(weighted);
      }
      dir += flags.use_psi ? Vec(flags.psi[l] * weighted)
                           : Vec(params.theta[l].transpose() * weighted);
    }
    updates[l] = dir;
  }
  for (int l = 0; l <= L; ++l)
    if (!state.clamped[l]) state.mu[l] += spec.step_size * updates[l];
  state.eps = relaxed_errors(state, params, spec, flags);
}

void psi_step(Mat& psi_l, const Vec& mu_l, const Vec& eps_below,
              const Mat& prec_below, const Mat& theta_l,
              ActivationKind act_below, bool drop_derivative, double eta) {
  require(psi_l.rows() == mu_l.size() && psi_l.cols() == eps_below.size(),
          "psi shape mismatch");
  Vec weighted = prec_below * eps_below;
  if (!drop_derivative) {
    const Vec pre = theta_l * mu_l;
    weighted = activate_prime(act_below, pre).cwiseProduct(weighted);
  }
  psi_l += eta * mu_l * weighted.transpose();
}

Vec zeta_error(const Vec& mu_l, const Vec& prediction, const Mat& zeta_l) {
  require(zeta_l.rows() == mu_l.size() && zeta_l.cols() == prediction.size(),
          "zeta shape mismatch");
  return mu_l - zeta_l * prediction;
}

void zeta_step(Mat& zeta_l, const Vec& mu_l, const Vec& eps_l, double eta) {
  require(zeta_l.rows() == mu_l.size() && zeta_l.cols() == eps_l.size(),
          "zeta shape mismatch");
  zeta_l += eta * mu_l * eps_l.transpose();
}

Mat zeta_gradient(const Vec& eps_l, const Mat& prec_l, const Vec& prediction) {
  return (prec_l * eps_l) * prediction.transpose();
}

}  // namespace pcn
