// End-to-end acceptance checks. Each check prints exactly one [PASS]/[FAIL]
// line; the process exits nonzero when any check fails. Run from the
// repository root (or pass the data directory as the first argument) so the
// digit dataset under data/digits is found.
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "pcn/dynamics.hpp"
#include "pcn/experiments.hpp"
#include "pcn/graph.hpp"
#include "pcn/idx.hpp"
#include "pcn/precision.hpp"
#include "pcn/relaxed.hpp"
#include "pcn/training.hpp"
#include "test_util.hpp"

using namespace pcn;
using namespace pcn::testutil;
namespace fs = std::filesystem;

namespace {

std::string g_data_dir = "data/digits";
int g_failures = 0;

void report(int index, const std::string& name, bool ok,
            const std::string& detail) {
  std::printf("[%s] check %d: %s (%s)\n", ok ? "PASS" : "FAIL", index,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void run_check(int index, const std::string& name,
               const std::function<std::pair<bool, std::string>()>& body) {
  try {
    auto [ok, detail] = body();
    report(index, name, ok, detail);
  } catch (const std::exception& e) {
    report(index, name, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------- check 1

std::pair<bool, std::string> check_gradients() {
  Rng rng(11);
  double worst = 0.0;
  auto track = [&](double err) { worst = std::max(worst, err); };

  for (int trial = 0; trial < 50; ++trial) {
    RandomNet net = random_net(rng);
    compute_errors(net.state, net.params, net.spec);
    const int L = net.spec.levels();
    std::uniform_int_distribution<int> layer_d(0, L);
    std::uniform_int_distribution<int> level_d(1, L);

    // Value update = -1/2 the free-energy gradient in the layer values.
    const int vl = layer_d(rng);
    Vec fd_mu = fd_gradient(
        [&](const Vec& m) {
          NetworkState s = net.state;
          s.mu[vl] = m;
          compute_errors(s, net.params, net.spec);
          return free_energy(s, net.params, net.spec);
        },
        net.state.mu[vl]);
    track(max_rel_error(mu_update_direction(net.state, net.params, net.spec, vl),
                        Vec(-0.5 * fd_mu), 1e-3));

    // Weight update = -1/2 the gradient in the forward weights.
    const int wl = level_d(rng);
    Mat fd_th = fd_gradient(
        [&](const Mat& th) {
          NetworkParams p = net.params;
          p.theta[wl] = th;
          NetworkState s = net.state;
          compute_errors(s, p, net.spec);
          return free_energy(s, p, net.spec);
        },
        net.params.theta[wl]);
    std::vector<Mat> wg = weight_gradients(net.state, net.params, net.spec);
    track(max_rel_error(wg[wl], Mat(-0.5 * fd_th), 1e-3));

    // Backward-weight update mirrors the transposed forward gradient.
    Mat psi = Mat::Zero(net.params.theta[wl].cols(), net.params.theta[wl].rows());
    psi_step(psi, net.state.mu[wl], net.state.eps[wl - 1],
             net.params.precision[wl - 1], net.params.theta[wl],
             net.spec.activation[wl - 1], false, 1.0);
    track(max_rel_error(psi, Mat(-0.5 * fd_th.transpose()), 1e-3));
  }

  // Variance gradient of the quadratic-plus-log-determinant objective.
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 3;
    Mat prec = random_spd(rng, d);
    Vec eps = gaussian_vector(rng, d);
    Mat fd = fd_gradient(
        [&](const Mat& p) {
          return eps.dot(p * eps) - std::log(p.determinant());
        },
        prec);
    track(max_rel_error(variance_gradient(prec.inverse(), eps),
                        Mat(0.5 * (fd + fd.transpose())), 1e-3));
  }

  // Error-connectivity gradient.
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 3;
    Vec mu = gaussian_vector(rng, d);
    Vec pred = gaussian_vector(rng, d);
    Mat prec = random_spd(rng, d);
    Mat zeta = Mat::Identity(d, d) + gaussian_matrix(rng, d, d, 0.2);
    Mat fd = fd_gradient(
        [&](const Mat& z) {
          Vec e = zeta_error(mu, pred, z);
          return e.dot(prec * e);
        },
        zeta);
    track(max_rel_error(zeta_gradient(zeta_error(mu, pred, zeta), prec, pred),
                        Mat(-0.5 * fd), 1e-3));
  }

  // Action update = -1/2 the gradient of the observation energy in the action.
  for (int trial = 0; trial < 50; ++trial) {
    const int od = 3, ad = 2;
    ActionConfig cfg;
    cfg.forward_model = gaussian_matrix(rng, od, ad);
    Mat prec = random_spd(rng, od);
    Vec o0 = gaussian_vector(rng, od);
    Vec setpoint = gaussian_vector(rng, od);
    Vec a0 = gaussian_vector(rng, ad);
    Vec fd = fd_gradient(
        [&](const Vec& a) {
          Vec o = o0 + cfg.forward_model * (a - a0);
          return (o - setpoint).dot(prec * (o - setpoint));
        },
        a0);
    track(max_rel_error(action_step(o0, setpoint, cfg, prec), Vec(-0.5 * fd),
                        1e-3));
  }

  return {worst < 1e-5, "max relative gradient error " + fmt(worst)};
}

// ---------------------------------------------------------------- check 2

std::pair<bool, std::string> check_kalman() {
  ExperimentConfig c;
  c.kind = ExperimentKind::kalman_compare;
  c.steps = 50;
  c.state_dim = 4;
  c.obs_dim = 3;
  c.seed = 12;
  SuiteSummary s = run_kalman_compare(c, nullptr);
  return {s.final_metric < 1e-6,
          "max filter-vs-relaxation gap " + fmt(s.final_metric)};
}

// ---------------------------------------------------------------- check 3

double graph_relax_gap(const ComputationGraph& g,
                       const std::vector<Vec>& inputs) {
  ForwardResult fwd = forward_pass(g, inputs);
  GradientResult oracle = reverse_oracle(g, fwd);
  AugmentedGraph aug = AugmentedGraph::make(g, fwd);
  RelaxOptions opts;
  opts.iters = 200 * static_cast<int>(g.vertices.size());
  opts.tol = 1e-13;
  pc_relax(aug, opts);
  auto grads = pc_weight_update(aug);
  double gap = 0.0;
  for (size_t i = 0; i < g.vertices.size(); ++i) {
    if (g.vertices[i].kind == VertexKind::input) continue;
    gap = std::max(gap,
                   (aug.eps[i] - oracle.vertex_grad[i]).cwiseAbs().maxCoeff());
    if (grads[i].size() > 0)
      gap = std::max(gap,
                     (grads[i] - oracle.theta_grad[i]).cwiseAbs().maxCoeff());
  }
  return gap;
}

std::pair<bool, std::string> check_backprop() {
  Rng rng(13);
  double worst = 0.0;

  auto add_linear = [&](ComputationGraph& g, int dim, int parent) {
    Vertex v;
    v.kind = VertexKind::linear;
    v.dim = dim;
    v.parents = {parent};
    v.theta = gaussian_matrix(rng, dim, g.vertices[parent].dim, 0.5);
    v.name = "v" + std::to_string(g.vertices.size());
    g.vertices.push_back(v);
    return static_cast<int>(g.vertices.size()) - 1;
  };
  auto add_act = [&](ComputationGraph& g, int parent) {
    Vertex v;
    v.kind = VertexKind::activation;
    v.dim = g.vertices[parent].dim;
    v.parents = {parent};
    v.act = ActivationKind::tanh_fn;
    v.name = "v" + std::to_string(g.vertices.size());
    g.vertices.push_back(v);
    return static_cast<int>(g.vertices.size()) - 1;
  };
  auto input_graph = [&](int dim) {
    ComputationGraph g;
    Vertex in;
    in.kind = VertexKind::input;
    in.dim = dim;
    in.name = "x";
    g.vertices.push_back(in);
    g.inputs.push_back(0);
    return g;
  };

  // Deep chains of alternating linear/activation vertices.
  for (int trial = 0; trial < 5; ++trial) {
    ComputationGraph g = input_graph(3);
    int node = 0;
    for (int depth = 0; depth < 6; ++depth)
      node = add_act(g, add_linear(g, 3, node));
    g.output = node;
    g.loss = LossKind::sum;
    worst = std::max(worst, graph_relax_gap(g, {gaussian_vector(rng, 3)}));
  }

  // Multilayer perceptrons with a squared-error loss.
  for (int trial = 0; trial < 5; ++trial) {
    ComputationGraph g = input_graph(8);
    int node = 0;
    for (int dim : {16, 12, 4}) node = add_act(g, add_linear(g, dim, node));
    g.output = node;
    g.loss = LossKind::sse;
    g.target = gaussian_vector(rng, 4);
    worst = std::max(worst, graph_relax_gap(g, {gaussian_vector(rng, 8)}));
  }

  // Fan-out / fan-in: two branches joined by a sum vertex.
  for (int trial = 0; trial < 5; ++trial) {
    ComputationGraph g = input_graph(4);
    int left = add_act(g, add_linear(g, 4, 0));
    int right = add_linear(g, 4, 0);
    Vertex join;
    join.kind = VertexKind::sum;
    join.dim = 4;
    join.parents = {left, right};
    join.name = "join";
    g.vertices.push_back(join);
    int node = add_linear(g, 2, static_cast<int>(g.vertices.size()) - 1);
    g.output = node;
    g.loss = LossKind::sum;
    worst = std::max(worst, graph_relax_gap(g, {gaussian_vector(rng, 4)}));
  }

  return {worst < 1e-5, "max relaxed-vs-reverse-mode gap " + fmt(worst)};
}

// ---------------------------------------------------------------- check 4

std::pair<bool, std::string> check_biased_competition() {
  Rng rng(14);
  const double eta = 0.07;
  const int dim_o = 4, dim_mu = 3;
  Mat theta1 = gaussian_matrix(rng, dim_o, dim_mu, 0.3);
  Mat theta2 = gaussian_matrix(rng, dim_mu, dim_mu, 0.3);
  Vec o = gaussian_vector(rng, dim_o);
  Vec mu_bar = gaussian_vector(rng, dim_mu);

  NetworkSpec spec;
  spec.layer_dims = {dim_o, dim_mu};
  spec.activation = {ActivationKind::identity};
  spec.prior_mean = theta2 * mu_bar;
  spec.step_size = eta;
  NetworkParams params;
  params.theta = {Mat(), theta1};
  params.precision = {Mat::Identity(dim_o, dim_o),
                      Mat::Identity(dim_mu, dim_mu)};
  NetworkState state = NetworkState::zeros(spec);
  state.mu[0] = o;
  state.clamped[0] = true;
  Vec mu = gaussian_vector(rng, dim_mu);
  state.mu[1] = mu;
  compute_errors(state, params, spec);

  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    mu = biased_competition_step(mu, mu_bar, o, theta1, theta2, 1.0 - eta, eta,
                                 eta);
    infer_step(state, params, spec);
    worst = std::max(worst, (mu - state.mu[1]).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max per-step deviation " + fmt(worst)};
}

// ---------------------------------------------------------------- check 5

std::pair<bool, std::string> check_pid() {
  ExperimentConfig c;
  c.kind = ExperimentKind::pid_compare;
  c.steps = 10000;
  c.dt = 0.01;
  SuiteSummary s = run_pid_compare(c, nullptr);
  return {s.final_metric < 1e-10,
          "max controller output gap " + fmt(s.final_metric)};
}

// ---------------------------------------------------------------- check 6

std::pair<bool, std::string> check_precision() {
  ExperimentConfig c;
  c.kind = ExperimentKind::precision_study;
  c.steps = 2000000;
  c.seed = 0;
  SuiteSummary s = run_precision_study(c, nullptr);
  return {s.passed, "worst fixed-point / sampling residual " +
                        fmt(s.final_metric)};
}

// ---------------------------------------------------------------- check 7

std::pair<bool, std::string> check_laplace() {
  Rng rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    RandomNet net = random_net(rng, 4, 8);
    for (auto& a : net.spec.activation) a = ActivationKind::identity;
    compute_errors(net.state, net.params, net.spec);
    const double direct = free_energy(net.state, net.params, net.spec);
    const double variational =
        laplace_free_energy(net.state, net.params, net.spec);
    worst = std::max(worst, std::abs(direct - variational) /
                                std::max(1.0, std::abs(direct)));
  }
  return {worst < 1e-10, "max relative route disagreement " + fmt(worst)};
}

// ---------------------------------------------------------------- check 8

std::pair<bool, std::string> check_digits() {
  const std::string train_images = g_data_dir + "/train-images-idx3-ubyte";
  if (!fs::exists(train_images))
    return {false, "dataset not found at " + g_data_dir};

  auto run = [&](bool use_psi, bool drop_derivative) {
    ExperimentConfig c;
    c.kind = ExperimentKind::train;
    c.layer_dims = {10, 64, 64};
    c.activations = {"identity", "tanh"};
    c.clamp_mode = ClampMode::supervised_backward;
    c.step_size = 0.05;
    c.weight_step_size = 0.5;
    c.max_iters = 100;
    c.tol = 1e-6;
    c.weight_decay = 0.001;
    c.epochs = 30;
    c.batch_size = 50;
    c.use_psi = use_psi;
    c.drop_derivative = drop_derivative;
    c.seed = 5;
    c.train_images = train_images;
    c.train_labels = g_data_dir + "/train-labels-idx1-ubyte";
    c.test_images = g_data_dir + "/test-images-idx3-ubyte";
    c.test_labels = g_data_dir + "/test-labels-idx1-ubyte";
    return run_train_suite(c, nullptr).final_metric;
  };

  const double standard = run(false, false);
  const double backward_weights = run(true, false);
  const double no_derivative = run(false, true);
  const bool ok = standard >= 0.90 &&
                  std::abs(backward_weights - standard) <= 0.02 + 1e-12 &&
                  std::abs(no_derivative - standard) <= 0.02 + 1e-12;
  return {ok, "test accuracy: standard " + fmt(standard) +
                  ", learned backward weights " + fmt(backward_weights) +
                  ", no derivative gate " + fmt(no_derivative)};
}

// ---------------------------------------------------------------- check 9

std::pair<bool, std::string> check_determinism() {
  fs::path dir = fs::temp_directory_path() /
                 ("pcn-accept-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  auto run = [&](const std::string& name) {
    ExperimentConfig c;
    c.kind = ExperimentKind::precision_study;
    c.steps = 5000;
    c.seed = 19;
    c.out = (dir / name).string();
    run_experiment(c);
    std::ifstream in(c.out, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
  };
  const std::string a = run("a.jsonl");
  const std::string b = run("b.jsonl");
  fs::remove_all(dir);
  if (a.empty()) return {false, "no metrics written"};
  return {a == b, a == b ? "outputs byte-identical across reruns"
                         : "outputs differ between identically seeded runs"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_data_dir = argv[1];
  run_check(1, "local updates descend the free energy", check_gradients);
  run_check(2, "linear relaxation matches the Kalman filter", check_kalman);
  run_check(3, "graph relaxation matches reverse-mode gradients",
            check_backprop);
  run_check(4, "biased competition is a value update in disguise",
            check_biased_competition);
  run_check(5, "three-order controller matches velocity-form PID", check_pid);
  run_check(6, "variance flow reaches its analytic fixed point",
            check_precision);
  run_check(7, "variational and direct free energies agree on linear models",
            check_laplace);
  run_check(8, "digit classification learns under all update rules",
            check_digits);
  run_check(9, "seeded runs are byte-for-byte reproducible",
            check_determinism);
  return g_failures == 0 ? 0 : 1;
}
