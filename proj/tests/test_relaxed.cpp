#include "doctest.h"
#include "pcn/relaxed.hpp"
#include "test_util.hpp"

using namespace pcn;
using namespace pcn::testutil;

namespace {

RelaxationFlags transpose_psi_flags(const RandomNet& net) {
  Rng rng(0);
  RelaxationFlags flags =
      RelaxationFlags::make(net.spec, true, false, false, rng);
  for (int l = 1; l <= net.spec.levels(); ++l)
    flags.psi[l] = net.params.theta[l].transpose();
  return flags;
}

}  // namespace

TEST_CASE("with all flags off the relaxed rules reduce to the standard ones") {
  Rng rng(501);
  for (int trial = 0; trial < 10; ++trial) {
    RandomNet net = random_net(rng);
    RelaxationFlags off;
    std::vector<Vec> rel = relaxed_errors(net.state, net.params, net.spec, off);
    std::vector<Vec> std_errs = evaluate_errors(net.state, net.params, net.spec);
    for (size_t l = 0; l < rel.size(); ++l)
      CHECK((rel[l] - std_errs[l]).cwiseAbs().maxCoeff() < 1e-14);

    NetworkState a = net.state, b = net.state;
    compute_errors(a, net.params, net.spec);
    compute_errors(b, net.params, net.spec);
    infer_step(a, net.params, net.spec);
    relaxed_infer_step(b, net.params, net.spec, off);
    for (size_t l = 0; l < a.mu.size(); ++l)
      CHECK((a.mu[l] - b.mu[l]).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("allocated shapes: psi transposed to theta, zeta at the identity") {
  Rng rng(502);
  RandomNet net = random_net(rng, 3, 6);
  RelaxationFlags flags =
      RelaxationFlags::make(net.spec, true, false, true, rng);
  for (int l = 1; l <= net.spec.levels(); ++l) {
    CHECK(flags.psi[l].rows() == net.params.theta[l].cols());
    CHECK(flags.psi[l].cols() == net.params.theta[l].rows());
    CHECK(flags.psi[l].cwiseAbs().maxCoeff() <= 0.05);
  }
  for (int l = 0; l < net.spec.levels(); ++l)
    CHECK(flags.zeta[l].isIdentity(1e-15));
  flags.validate(net.spec);
  flags.psi[1] = Mat::Zero(1, flags.psi[1].cols() + 1);
  CHECK_THROWS_AS(flags.validate(net.spec), StructuralError);
}

TEST_CASE("scalar example: one relaxed step reproduces the standard value") {
  RandomNet net = scalar_example();
  RelaxationFlags flags = transpose_psi_flags(net);
  compute_errors(net.state, net.params, net.spec);
  relaxed_infer_step(net.state, net.params, net.spec, flags);
  CHECK(net.state.mu[1][0] == doctest::Approx(1.9));
}

TEST_CASE("backward weights at the transpose match the ungated step") {
  Rng rng(503);
  for (int trial = 0; trial < 10; ++trial) {
    RandomNet net = random_net(rng);
    RelaxationFlags psi_flags = transpose_psi_flags(net);
    RelaxationFlags drop;
    drop.drop_derivative = true;

    NetworkState a = net.state, b = net.state;
    compute_errors(a, net.params, net.spec);
    compute_errors(b, net.params, net.spec);
    relaxed_infer_step(a, net.params, net.spec, psi_flags);
    relaxed_infer_step(b, net.params, net.spec, drop);
    for (size_t l = 0; l < a.mu.size(); ++l)
      CHECK((a.mu[l] - b.mu[l]).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dropping the derivative changes nothing on identity activations") {
  Rng rng(504);
  RandomNet net = random_net(rng);
  for (ActivationKind& a : net.spec.activation) a = ActivationKind::identity;
  RelaxationFlags drop;
  drop.drop_derivative = true;
  NetworkState a = net.state, b = net.state;
  compute_errors(a, net.params, net.spec);
  compute_errors(b, net.params, net.spec);
  infer_step(a, net.params, net.spec);
  relaxed_infer_step(b, net.params, net.spec, drop);
  for (size_t l = 0; l < a.mu.size(); ++l)
    CHECK((a.mu[l] - b.mu[l]).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("backward-weight learning mirrors the forward Hebbian kernel") {
  Rng rng(505);
  for (int trial = 0; trial < 10; ++trial) {
    RandomNet net = random_net(rng);
    compute_errors(net.state, net.params, net.spec);
    for (int l = 1; l <= net.spec.levels(); ++l) {
      Mat fwd = theta_update_direction(
          net.state.eps[l - 1], net.params.precision[l - 1], net.state.mu[l],
          net.params.theta[l], net.spec.activation[l - 1]);
      Mat psi = Mat::Zero(net.spec.layer_dims[l], net.spec.layer_dims[l - 1]);
      psi_step(psi, net.state.mu[l], net.state.eps[l - 1],
               net.params.precision[l - 1], net.params.theta[l],
               net.spec.activation[l - 1], false, 0.25);
      CHECK((psi - 0.25 * fwd.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("backward-weight learning can skip the derivative gate") {
  Rng rng(506);
  Vec mu = gaussian_vector(rng, 2);
  Vec eps = gaussian_vector(rng, 3);
  Mat prec = random_spd(rng, 3);
  Mat theta = gaussian_matrix(rng, 3, 2);
  Mat psi = Mat::Zero(2, 3);
  psi_step(psi, mu, eps, prec, theta, ActivationKind::tanh_fn, true, 0.5);
  Mat expected = 0.5 * mu * (prec * eps).transpose();
  CHECK((psi - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("identity error connectivity reproduces the standard errors") {
  Rng rng(507);
  RandomNet net = random_net(rng);
  RelaxationFlags flags =
      RelaxationFlags::make(net.spec, false, false, true, rng);
  std::vector<Vec> rel =
      relaxed_errors(net.state, net.params, net.spec, flags);
  std::vector<Vec> std_errs = evaluate_errors(net.state, net.params, net.spec);
  for (size_t l = 0; l < rel.size(); ++l)
    CHECK((rel[l] - std_errs[l]).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("error-connectivity arithmetic on hand values") {
  // mu = 3, prediction = 1, zeta = 2 -> eps = 3 - 2*1 = 1.
  Vec eps = zeta_error(Vec::Constant(1, 3.0), Vec::Constant(1, 1.0),
                       Mat::Constant(1, 1, 2.0));
  CHECK(eps[0] == doctest::Approx(1.0));
  // Literal Hebbian increment: zeta += eta mu eps' = 2 + 0.1*3*1.
  Mat zeta = Mat::Constant(1, 1, 2.0);
  zeta_step(zeta, Vec::Constant(1, 3.0), eps, 0.1);
  CHECK(zeta(0, 0) == doctest::Approx(2.3));
}

TEST_CASE("exact error-connectivity gradient matches finite differences") {
  Rng rng(508);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3;
    Vec mu = gaussian_vector(rng, d);
    Vec pred = gaussian_vector(rng, d);
    Mat prec = random_spd(rng, d);
    Mat zeta = Mat::Identity(d, d) + gaussian_matrix(rng, d, d, 0.1);
    auto energy = [&](const Mat& z) {
      Vec e = zeta_error(mu, pred, z);
      return e.dot(prec * e);
    };
    Mat fd = fd_gradient(energy, zeta);
    Vec eps = zeta_error(mu, pred, zeta);
    Mat analytic = zeta_gradient(eps, prec, pred);
    CHECK(max_rel_error(analytic, Mat(-0.5 * fd), 1e-4) < 1e-5);
  }
}

TEST_CASE("relaxed inference still settles on a linear model") {
  Rng rng(509);
  RandomNet net = scalar_example();
  RelaxationFlags flags = transpose_psi_flags(net);
  net.state.clamped[0] = true;
  compute_errors(net.state, net.params, net.spec);
  for (int it = 0; it < 2000; ++it)
    relaxed_infer_step(net.state, net.params, net.spec, flags);
  // Analytic minimizer of (3 - 0.5 mu)^2 + mu^2 is 1.5/1.25 = 1.2.
  CHECK(net.state.mu[1][0] == doctest::Approx(1.2).epsilon(1e-8));
}
