#include "pcn/precision.hpp"

namespace pcn {
namespace {

constexpr double kEigenFloor = 1e-8;

Mat floor_spd(const Mat& m) {
  Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  Vec vals = es.eigenvalues().cwiseMax(kEigenFloor);
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

void check_pd(const Mat& sigma) {
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::domain_error("sigma is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::domain_error("sigma is not positive definite");
}

}  // namespace

PrecisionMode precision_mode_from_string(const std::string& name) {
  if (name == "fixed") return PrecisionMode::fixed;
  if (name == "diagonal_learned") return PrecisionMode::diagonal_learned;
  if (name == "full_learned") return PrecisionMode::full_learned;
  throw StructuralError("unknown precision mode: " + name);
}

std::string to_string(PrecisionMode m) {
  switch (m) {
    case PrecisionMode::fixed: return "fixed";
    case PrecisionMode::diagonal_learned: return "diagonal_learned";
    case PrecisionMode::full_learned: return "full_learned";
  }
  return "fixed";
}

Mat precision_step(const Mat& sigma, const Vec& eps, double eta_sigma) {
  require(sigma.rows() == eps.size(), "sigma/eps dimension mismatch");
  check_pd(sigma);
  Vec weighted = sigma.llt().solve(eps);
  Mat next = sigma + eta_sigma * (weighted * weighted.transpose() - sigma);
  return floor_spd(next);
}

Vec precision_step_diagonal(const Vec& sigma_diag, const Vec& eps,
                            double eta_sigma) {
  require(sigma_diag.size() == eps.size(), "sigma/eps dimension mismatch");
  if (sigma_diag.minCoeff() <= 0.0)
    throw std::domain_error("diagonal sigma must be positive");
  Vec weighted = eps.cwiseQuotient(sigma_diag);
  Vec next =
      sigma_diag + eta_sigma * (weighted.cwiseProduct(weighted) - sigma_diag);
  return next.cwiseMax(kEigenFloor);
}

double empirical_fixed_point_check(const std::vector<Vec>& error_samples,
                                   const Mat& sigma) {
  require(error_samples.size() >= 100, "need at least 100 error samples");
  check_pd(sigma);
  Eigen::LLT<Mat> llt(sigma);
  Mat acc = Mat::Zero(sigma.rows(), sigma.cols());
  for (const Vec& eps : error_samples) {
    require(eps.size() == sigma.rows(), "sample dimension mismatch");
    Vec weighted = llt.solve(eps);
    acc += weighted * weighted.transpose();
  }
  acc /= static_cast<double>(error_samples.size());
  return (acc - sigma).cwiseAbs().maxCoeff();
}

Mat variance_gradient(const Mat& sigma, const Vec& eps) {
  require(sigma.rows() == eps.size(), "sigma/eps dimension mismatch");
  return eps * eps.transpose() - sigma;
}

double fisher_check_mu(const Mat& prec, const Mat& theta, const Vec& mu_above,
                       const Vec& mu) {
  require(theta.rows() == mu.size() && theta.cols() == mu_above.size(),
          "theta shape mismatch");
  const Eigen::Index d = mu.size();
  const double h = 1e-4;
  auto energy = [&](const Vec& m) {
    Vec eps = m - theta * mu_above;
    return eps.dot(prec * eps);
  };
  Mat hessian(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Vec pp = mu, pm = mu, mp = mu, mm = mu;
      pp[i] += h; pp[j] += h;
      pm[i] += h; pm[j] -= h;
      mp[i] -= h; mp[j] += h;
      mm[i] -= h; mm[j] -= h;
      hessian(i, j) =
          (energy(pp) - energy(pm) - energy(mp) + energy(mm)) / (4.0 * h * h);
    }
  }
  return (0.5 * hessian - prec).cwiseAbs().maxCoeff();
}

double fisher_check_theta(const Mat& prec, const Mat& theta,
                          const std::vector<Vec>& activity_samples) {
  require(!activity_samples.empty(), "need activity samples");
  const Eigen::Index rows = theta.rows();
  const Eigen::Index cols = theta.cols();
  const Eigen::Index n = rows * cols;
  const double h = 1e-4;

  Mat second_moment = Mat::Zero(cols, cols);
  Mat hess_sum = Mat::Zero(n, n);
  for (const Vec& mu : activity_samples) {
    require(mu.size() == cols, "activity sample dimension mismatch");
    second_moment += mu * mu.transpose();
    auto energy = [&](const Mat& th) {
      Vec eps = -(th * mu);  // value term fixed at zero; curvature unaffected
      return eps.dot(prec * eps);
    };
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        Mat pp = theta, pm = theta, mp = theta, mm = theta;
        pp(a % rows, a / rows) += h; pp(b % rows, b / rows) += h;
        pm(a % rows, a / rows) += h; pm(b % rows, b / rows) -= h;
        mp(a % rows, a / rows) -= h; mp(b % rows, b / rows) += h;
        mm(a % rows, a / rows) -= h; mm(b % rows, b / rows) -= h;
        hess_sum(a, b) +=
            (energy(pp) - energy(pm) - energy(mp) + energy(mm)) /
            (4.0 * h * h);
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(activity_samples.size());
  second_moment *= inv_n;
  hess_sum *= 0.5 * inv_n;

  // Expected curvature in vec(theta) (column-major): E[mu mu'] (x) prec.
  Mat expected(n, n);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < cols; ++i)
      expected.block(i * rows, j * rows, rows, rows) =
          second_moment(i, j) * prec;
  return (hess_sum - expected).cwiseAbs().maxCoeff();
}

}  // namespace pcn
