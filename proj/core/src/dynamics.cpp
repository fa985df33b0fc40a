#include "pcn/dynamics.hpp"

#include <cmath>

namespace pcn {

GeneralizedState GeneralizedState::zeros(int depth, int dim) {
  require(depth >= 1 && dim >= 1, "depth and dim must be >= 1");
  GeneralizedState g;
  g.orders.assign(depth, Vec::Zero(dim));
  return g;
}

void GeneralizedState::validate() const {
  require(!orders.empty(), "generalized state needs at least one order");
  for (const Vec& v : orders)
    require(v.size() == orders[0].size(), "orders must share dimension");
}

GeneralizedState shift(const GeneralizedState& gen) {
  gen.validate();
  GeneralizedState out;
  out.orders.reserve(gen.orders.size());
  for (size_t k = 1; k < gen.orders.size(); ++k)
    out.orders.push_back(gen.orders[k]);
  out.orders.push_back(Vec::Zero(gen.dim()));
  return out;
}

void GeneralizedModel::validate(int depth, int dim) const {
  require(J.cols() == dim, "J column count must match the state dimension");
  require(G.rows() == dim && G.cols() == dim, "G must be dim x dim");
  require(static_cast<int>(mu_bar.size()) == depth,
          "need one setpoint per order");
  require(static_cast<int>(obs_prec.size()) == depth,
          "need one observation precision per order");
  require(static_cast<int>(dyn_prec.size()) == depth,
          "need one dynamics precision per order");
  for (const Vec& m : mu_bar)
    require(m.size() == dim, "setpoint dimension mismatch");
  for (const Mat& p : obs_prec)
    require(p.rows() == J.rows() && p.cols() == J.rows(),
            "observation precision shape mismatch");
  for (const Mat& p : dyn_prec)
    require(p.rows() == dim && p.cols() == dim,
            "dynamics precision shape mismatch");
}

GeneralizedErrors generalized_errors(const GeneralizedState& gen,
                                     const GeneralizedModel& model,
                                     const std::vector<Vec>& obs_orders) {
  gen.validate();
  const int K = gen.depth();
  const int dim = gen.dim();
  model.validate(K, dim);
  require(static_cast<int>(obs_orders.size()) == K,
          "need one observation per order");
  GeneralizedErrors e;
  e.obs.resize(K);
  e.dyn.resize(K);
  for (int k = 0; k < K; ++k) {
    require(obs_orders[k].size() == model.J.rows(),
            "observation dimension mismatch");
    e.obs[k] = obs_orders[k] - model.J * gen.orders[k];
    // The order above the truncation is identically zero.
    Vec above = (k + 1 < K) ? gen.orders[k + 1] : Vec(Vec::Zero(dim));
    e.dyn[k] = above - model.G * (gen.orders[k] - model.mu_bar[k]);
  }
  return e;
}

void generalized_step(GeneralizedState& gen, const GeneralizedModel& model,
                      const std::vector<Vec>& obs_orders, double eta) {
  GeneralizedErrors e = generalized_errors(gen, model, obs_orders);
  const int K = gen.depth();
  std::vector<Vec> updates(K);
  for (int k = 0; k < K; ++k) {
    Vec dir = (k + 1 < K) ? gen.orders[k + 1] : Vec(Vec::Zero(gen.dim()));
    dir += model.J.transpose() * (model.obs_prec[k] * e.obs[k]);
    dir += model.G.transpose() * (model.dyn_prec[k] * e.dyn[k]);
    if (k > 0) dir -= model.dyn_prec[k - 1] * e.dyn[k - 1];
    updates[k] = dir;
  }
  for (int k = 0; k < K; ++k) {
    gen.orders[k] += eta * updates[k];
    if (!gen.orders[k].allFinite())
      throw DivergenceError("generalized flow diverged at order " +
                            std::to_string(k));
  }
}

Vec action_step(const Vec& o, const Vec& setpoint, const ActionConfig& cfg,
                const Mat& obs_prec) {
  require(cfg.forward_model.rows() == o.size(),
          "forward model row count must match the observation dimension");
  require(setpoint.size() == o.size(), "setpoint dimension mismatch");
  return -cfg.forward_model.transpose() * (obs_prec * (o - setpoint));
}

Vec action_step_with_cost(const Vec& o, const Vec& setpoint, const Vec& a,
                          const ActionConfig& cfg, const Mat& obs_prec) {
  Vec inc = action_step(o, setpoint, cfg, obs_prec);
  if (cfg.action_prec.size() == 0) return inc;
  Vec a_bar = cfg.action_prior.size() > 0 ? cfg.action_prior
                                          : Vec(Vec::Zero(a.size()));
  require(a_bar.size() == a.size(), "action prior dimension mismatch");
  return inc - cfg.action_prec * (a - a_bar);
}

double pid_reference(const std::vector<double>& error_history, double k_p,
                     double k_i, double k_d, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  require(error_history.size() >= 2,
          "need at least two samples for the derivative term");
  const size_t n = error_history.size();
  // Trapezoid with an implicit zero sample before the recorded history.
  double integral = 0.5 * error_history[0] * dt;
  for (size_t i = 1; i < n; ++i)
    integral += 0.5 * (error_history[i - 1] + error_history[i]) * dt;
  double derivative = (error_history[n - 1] - error_history[n - 2]) / dt;
  return k_p * error_history[n - 1] + k_i * integral + k_d * derivative;
}

std::vector<double> pid_derivative_control(const std::vector<double>& obs,
                                           double setpoint, double k_p,
                                           double k_i, double k_d, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  std::vector<double> a;
  a.reserve(obs.size());
  double action = 0.0, e_prev = 0.0, de_prev = 0.0;
  for (size_t t = 0; t < obs.size(); ++t) {
    const double e = obs[t] - setpoint;
    const double de = (e - e_prev) / dt;
    const double dde = (de - de_prev) / dt;
    action += -(k_i * e + k_p * de + k_d * dde) * dt;
    a.push_back(action);
    e_prev = e;
    de_prev = de;
  }
  return a;
}

std::vector<double> pc_pid_controller(const std::vector<double>& obs,
                                      double setpoint, const Vec& order_precs,
                                      double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  require(order_precs.size() == 3, "need precisions for three orders");
  std::vector<double> a;
  a.reserve(obs.size());
  double action = 0.0, e_prev = 0.0, de_prev = 0.0;
  for (size_t t = 0; t < obs.size(); ++t) {
    const double e = obs[t] - setpoint;
    const double de = (e - e_prev) / dt;
    const double dde = (de - de_prev) / dt;
    action +=
        -(order_precs[0] * e + order_precs[1] * de + order_precs[2] * dde) * dt;
    a.push_back(action);
    e_prev = e;
    de_prev = de;
  }
  return a;
}

std::vector<double> colored_noise(Rng& rng, int n, double stddev,
                                  double width) {
  std::normal_distribution<double> d(0.0, stddev);
  std::vector<double> white(n);
  for (double& w : white) w = d(rng);
  if (width <= 0.0) return white;
  const int radius = static_cast<int>(std::ceil(3.0 * width));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i / width) * (i / width));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;
  std::vector<double> out(n, 0.0);
  for (int t = 0; t < n; ++t)
    for (int i = -radius; i <= radius; ++i) {
      int s = std::clamp(t + i, 0, n - 1);
      out[t] += kernel[i + radius] * white[s];
    }
  return out;
}

}  // namespace pcn
