#pragma once

#include <Eigen/Dense>
#include <random>
#include <stdexcept>
#include <string>

namespace pcn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Numerical blow-up during an iterative scheme.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Inconsistent shapes or malformed structure.
class StructuralError : public std::invalid_argument {
 public:
  explicit StructuralError(const std::string& what) : std::invalid_argument(what) {}
};

/// Operation invoked on a configuration it is not defined for.
class UnsupportedConfiguration : public std::logic_error {
 public:
  explicit UnsupportedConfiguration(const std::string& what)
      : std::logic_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw StructuralError(msg);
}

inline Vec gaussian_vector(Rng& rng, Eigen::Index n, double stddev = 1.0) {
  std::normal_distribution<double> d(0.0, stddev);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline Mat gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                           double stddev = 1.0) {
  std::normal_distribution<double> d(0.0, stddev);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

/// Random symmetric positive-definite matrix with eigenvalues bounded away
/// from zero.
inline Mat random_spd(Rng& rng, Eigen::Index n, double jitter = 0.5) {
  Mat a = gaussian_matrix(rng, n, n);
  return a * a.transpose() / double(n) + jitter * Mat::Identity(n, n);
}

}  // namespace pcn
