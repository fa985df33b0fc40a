#include "pcn/kalman.hpp"

#include <fstream>
#include <sstream>

namespace pcn {
namespace {

void check_spd(const Mat& m, const std::string& name) {
  require(m.rows() == m.cols(), name + " must be square");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::domain_error(name + " is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error(name + " is not positive definite");
}

}  // namespace

void LinearStateSpace::validate() const {
  require(A.rows() == A.cols(), "A must be square");
  require(B.rows() == A.rows(), "B row count must match the state dimension");
  require(C.cols() == A.rows(), "C column count must match the state dimension");
  require(sigma1.rows() == A.rows(), "sigma1 must be n x n");
  require(sigma2.rows() == C.rows(), "sigma2 must be p x p");
  check_spd(sigma1, "sigma1");
  check_spd(sigma2, "sigma2");
}

BeliefState kf_project(const BeliefState& belief, const Vec& u,
                       const LinearStateSpace& model) {
  require(belief.mean.size() == model.state_dim(), "belief dimension mismatch");
  require(u.size() == model.control_dim(), "control dimension mismatch");
  BeliefState out;
  out.mean = model.A * belief.mean + model.B * u;
  out.cov = model.A * belief.cov * model.A.transpose() + model.sigma1;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

BeliefState kf_correct(const BeliefState& predicted, const Vec& o,
                       const LinearStateSpace& model) {
  require(o.size() == model.obs_dim(), "observation dimension mismatch");
  const Mat& C = model.C;
  Mat innovation_cov = C * predicted.cov * C.transpose() + model.sigma2;
  Eigen::LDLT<Mat> ldlt(innovation_cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::domain_error("singular innovation covariance");
  // K = S C' (C S C' + Sigma2)^{-1}, solved without forming the inverse
  Mat K = ldlt.solve(C * predicted.cov.transpose()).transpose();
  BeliefState out;
  out.mean = predicted.mean + K * (o - C * predicted.mean);
  const Mat I = Mat::Identity(model.state_dim(), model.state_dim());
  out.cov = (I - K * C) * predicted.cov;
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

double pc_step_bound(const Mat& C, const Mat& sigma2, const Mat& prior_prec) {
  Mat hessian = C.transpose() * sigma2.llt().solve(C) + prior_prec;
  Eigen::SelfAdjointEigenSolver<Mat> es(hessian, Eigen::EigenvaluesOnly);
  return 2.0 / es.eigenvalues().maxCoeff();
}

Vec pc_map_solve(const Vec& prior_mean, const Mat& prior_cov, const Vec& o,
                 const Mat& C, const Mat& sigma2, double eta, int iters) {
  require(C.cols() == prior_mean.size(), "C/prior dimension mismatch");
  require(o.size() == C.rows(), "observation dimension mismatch");
  require(iters >= 1, "iters must be >= 1");
  Eigen::LLT<Mat> prior_llt(prior_cov);
  Eigen::LLT<Mat> obs_llt(sigma2);
  if (prior_llt.info() != Eigen::Success || obs_llt.info() != Eigen::Success)
    throw std::domain_error("covariances must be positive definite");
  const Mat prior_prec = prior_llt.solve(Mat::Identity(prior_cov.rows(),
                                                       prior_cov.cols()));
  if (eta >= pc_step_bound(C, sigma2, prior_prec))
    throw std::invalid_argument("step size exceeds the stability bound");

  Vec mu = prior_mean;
  for (int it = 1; it <= iters; ++it) {
    Vec grad = -C.transpose() * obs_llt.solve(o - C * mu) +
               prior_prec * (mu - prior_mean);
    mu -= eta * grad;
    if (!mu.allFinite())
      throw DivergenceError("MAP iteration diverged at step " +
                            std::to_string(it));
  }
  return mu;
}

Vec pc_linear_solve(const Vec& prev_mean, const Vec& u, const Vec& o,
                    const LinearStateSpace& model, double eta, int iters) {
  Vec prior_mean = model.A * prev_mean + model.B * u;
  return pc_map_solve(prior_mean, model.sigma1, o, model.C, model.sigma2, eta,
                      iters);
}

void learn_ssm_step(const Vec& mu_next, const Vec& mu, const Vec& u,
                    const Vec& o, LinearStateSpace& model, double eta) {
  require(mu.size() == model.state_dim() && mu_next.size() == model.state_dim(),
          "state dimension mismatch");
  require(u.size() == model.control_dim(), "control dimension mismatch");
  require(o.size() == model.obs_dim(), "observation dimension mismatch");
  Vec eps_x = mu_next - model.A * mu - model.B * u;
  Vec eps_o = o - model.C * mu_next;
  Vec wx = model.sigma1.llt().solve(eps_x);
  Vec wo = model.sigma2.llt().solve(eps_o);
  model.A += eta * wx * mu.transpose();
  model.B += eta * wx * u.transpose();
  model.C += eta * wo * mu_next.transpose();
}

std::vector<TrajectoryStep> read_trajectory(const std::string& path,
                                            int control_dim, int obs_dim) {
  std::ifstream in(path);
  require(in.good(), "cannot open trajectory file: " + path);
  std::vector<TrajectoryStep> steps;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    TrajectoryStep s;
    s.u.resize(control_dim);
    s.o.resize(obs_dim);
    for (int i = 0; i < control_dim; ++i) row >> s.u[i];
    for (int i = 0; i < obs_dim; ++i) row >> s.o[i];
    require(static_cast<bool>(row), "malformed trajectory row: " + line);
    steps.push_back(std::move(s));
  }
  return steps;
}

void write_trajectory(const std::string& path,
                      const std::vector<TrajectoryStep>& steps) {
  std::ofstream out(path);
  require(out.good(), "cannot open trajectory file for writing: " + path);
  out.precision(17);
  for (const TrajectoryStep& s : steps) {
    for (Eigen::Index i = 0; i < s.u.size(); ++i) out << s.u[i] << ' ';
    for (Eigen::Index i = 0; i < s.o.size(); ++i)
      out << s.o[i] << (i + 1 == s.o.size() ? '\n' : ' ');
  }
}

}  // namespace pcn
