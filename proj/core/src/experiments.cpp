#include "pcn/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>

#include "pcn/dynamics.hpp"
#include "pcn/graph.hpp"
#include "pcn/idx.hpp"
#include "pcn/precision.hpp"

namespace pcn {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

struct Dataset {
  std::vector<Vec> images;
  std::vector<int> labels;
};

Dataset load_dataset(const std::string& images_path,
                     const std::string& labels_path, int count) {
  Dataset ds;
  ds.images = idx_to_images(read_idx(images_path));
  ds.labels = idx_to_labels(read_idx(labels_path));
  require(ds.images.size() == ds.labels.size(),
          "image and label files disagree on the item count");
  if (count > 0 && static_cast<size_t>(count) < ds.images.size()) {
    ds.images.resize(count);
    ds.labels.resize(count);
  }
  return ds;
}

// Synthetic stand-in when no dataset paths are configured: one Gaussian
// cluster per class.
Dataset synth_clusters(Rng& rng, int n_classes, int dim, int n_per_class) {
  Dataset ds;
  std::vector<Vec> centers;
  for (int c = 0; c < n_classes; ++c)
    centers.push_back(gaussian_vector(rng, dim, 1.0));
  for (int c = 0; c < n_classes; ++c)
    for (int i = 0; i < n_per_class; ++i) {
      ds.images.push_back(centers[c] + gaussian_vector(rng, dim, 0.1));
      ds.labels.push_back(c);
    }
  return ds;
}

LabeledBatch make_batch(const Dataset& ds, size_t begin, size_t end,
                        ClampMode mode, int label_dim, double smoothing) {
  LabeledBatch batch;
  std::vector<Vec> labels;
  for (size_t i = begin; i < end; ++i) {
    batch.inputs.push_back(ds.images[i]);
    labels.push_back(one_hot(ds.labels[i], label_dim, smoothing));
  }
  if (mode != ClampMode::unsupervised) batch.labels = std::move(labels);
  return batch;
}

void maybe_append(MetricsWriter* metrics, MetricsRecord record, bool timing,
                  Clock::time_point start) {
  if (!metrics) return;
  if (timing) record.wall_ms = elapsed_ms(start);
  metrics->append(record);
}

}  // namespace

std::vector<Vec> synth_linear_gaussian(std::uint64_t seed, int n,
                                       const Vec& mean, const Mat& cov) {
  require(n >= 0, "sample count must be non-negative");
  require(cov.rows() == mean.size() && cov.cols() == mean.size(),
          "covariance shape mismatch");
  Mat sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::domain_error("covariance must be positive semi-definite");
  Mat root = es.eigenvectors() *
             es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Rng rng(seed);
  std::vector<Vec> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back(mean + root * gaussian_vector(rng, mean.size()));
  return out;
}

LinearStateSpace random_stable_system(Rng& rng, int state_dim, int obs_dim,
                                      int control_dim) {
  LinearStateSpace model;
  model.A = gaussian_matrix(rng, state_dim, state_dim, 1.0);
  Eigen::EigenSolver<Mat> es(model.A);
  const double radius = es.eigenvalues().cwiseAbs().maxCoeff();
  model.A *= 0.9 / std::max(radius, 1e-12);
  model.B = gaussian_matrix(rng, state_dim, control_dim, 0.5);
  model.C = gaussian_matrix(rng, obs_dim, state_dim, 1.0);
  model.sigma1 = random_spd(rng, state_dim, 0.5);
  model.sigma2 = random_spd(rng, obs_dim, 0.5);
  model.validate();
  return model;
}

SuiteSummary run_train_suite(const ExperimentConfig& config,
                             MetricsWriter* metrics) {
  const auto start = Clock::now();
  NetworkSpec spec = config.to_network_spec();
  const int L = spec.levels();
  const int label_dim = config.clamp_mode == ClampMode::supervised_backward
                            ? spec.layer_dims[0]
                            : spec.layer_dims[L];
  const int data_dim = config.clamp_mode == ClampMode::supervised_backward
                           ? spec.layer_dims[L]
                           : spec.layer_dims[0];

  Rng rng(config.seed);
  Dataset train, test;
  if (!config.train_images.empty()) {
    train = load_dataset(config.train_images, config.train_labels,
                         config.train_count);
    if (!config.test_images.empty())
      test = load_dataset(config.test_images, config.test_labels,
                          config.test_count);
  } else {
    // One cluster per class, shared between the train and test splits.
    const int per_train = std::max(config.train_count / label_dim, 10);
    const int per_test = std::max(config.test_count / label_dim, 5);
    Dataset all =
        synth_clusters(rng, label_dim, data_dim, per_train + per_test);
    for (size_t i = 0; i < all.images.size(); ++i) {
      const bool to_train =
          static_cast<int>(i) % (per_train + per_test) < per_train;
      (to_train ? train : test).images.push_back(all.images[i]);
      (to_train ? train : test).labels.push_back(all.labels[i]);
    }
  }
  for (const Vec& im : train.images)
    require(im.size() == data_dim, "dataset item dimension mismatch");

  NetworkParams params = NetworkParams::make(spec, rng);
  RelaxationFlags flags =
      RelaxationFlags::make(spec, config.use_psi, config.drop_derivative,
                            config.use_zeta, rng);
  TrainOptions opts;
  opts.em.weight_decay = config.weight_decay;
  opts.label_smoothing = config.label_smoothing;
  const bool relaxed =
      config.use_psi || config.drop_derivative || config.use_zeta;
  if (relaxed) opts.relax = &flags;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double f_sum = 0.0;
    int batches = 0;
    for (size_t begin = 0; begin < train.images.size();
         begin += config.batch_size) {
      size_t end = std::min(begin + config.batch_size, train.images.size());
      LabeledBatch batch = make_batch(train, begin, end, config.clamp_mode,
                                      label_dim, config.label_smoothing);
      f_sum += em_epoch_mode(batch, config.clamp_mode, params, spec, rng, opts)
                   .mean_free_energy;
      ++batches;
    }
    // Per-layer error norms probed on the first training item.
    MetricsRecord rec;
    rec.step = epoch;
    rec.free_energy = f_sum / std::max(batches, 1);
    {
      NetworkState s = NetworkState::zeros(spec);
      std::optional<Vec> label =
          config.clamp_mode == ClampMode::unsupervised
              ? std::nullopt
              : std::optional<Vec>(one_hot(train.labels[0], label_dim,
                                           config.label_smoothing));
      apply_clamps(config.clamp_mode, train.images[0], label, s, spec);
      initialize_latents(s, params, spec, rng);
      run_inference_flags(s, params, spec, opts.relax);
      for (int l = 0; l <= L; ++l)
        rec.layer_error_norms.push_back(s.eps[l].norm());
    }
    maybe_append(metrics, rec, config.timing, start);
  }

  SuiteSummary summary;
  if (!test.images.empty() && config.clamp_mode != ClampMode::unsupervised) {
    summary.final_metric =
        evaluate_accuracy(test.images, test.labels, params, spec,
                          config.clamp_mode, rng, opts.relax);
    MetricsRecord rec;
    rec.step = config.epochs + 1;
    rec.free_energy = 0.0;
    rec.task_metric_name = "test_accuracy";
    rec.task_metric_value = summary.final_metric;
    maybe_append(metrics, rec, config.timing, start);
  }
  if (!config.model_out.empty()) save_params(config.model_out, params);
  return summary;
}

SuiteSummary run_classify_suite(const ExperimentConfig& config,
                                MetricsWriter* metrics) {
  const auto start = Clock::now();
  require(!config.model_in.empty(), "classify requires model_in");
  require(!config.test_images.empty(), "classify requires test_images");
  NetworkSpec spec = config.to_network_spec();
  NetworkParams params = load_params(config.model_in);
  params.validate(spec);
  Dataset test =
      load_dataset(config.test_images, config.test_labels, config.test_count);
  Rng rng(config.seed);
  SuiteSummary summary;
  summary.final_metric = evaluate_accuracy(test.images, test.labels, params,
                                           spec, config.clamp_mode, rng);
  MetricsRecord rec;
  rec.step = 0;
  rec.task_metric_name = "test_accuracy";
  rec.task_metric_value = summary.final_metric;
  maybe_append(metrics, rec, config.timing, start);
  return summary;
}

SuiteSummary run_generate_suite(const ExperimentConfig& config,
                                MetricsWriter* metrics) {
  const auto start = Clock::now();
  require(!config.model_in.empty(), "generate requires model_in");
  NetworkSpec spec = config.to_network_spec();
  NetworkParams params = load_params(config.model_in);
  params.validate(spec);
  Rng rng(config.seed);
  const int label_dim = config.clamp_mode == ClampMode::supervised_backward
                            ? spec.layer_dims[0]
                            : spec.layer_dims[spec.levels()];
  SuiteSummary summary;
  double norm_sum = 0.0;
  for (int c = 0; c < label_dim; ++c) {
    Vec item = generate(one_hot(c, label_dim), params, spec,
                        config.clamp_mode, rng);
    norm_sum += item.norm();
    MetricsRecord rec;
    rec.step = c;
    rec.task_metric_name = "generated_norm";
    rec.task_metric_value = item.norm();
    maybe_append(metrics, rec, config.timing, start);
  }
  summary.final_metric = norm_sum / label_dim;
  return summary;
}

SuiteSummary run_kalman_compare(const ExperimentConfig& config,
                                MetricsWriter* metrics) {
  const auto start = Clock::now();
  Rng rng(config.seed);
  const int n_systems = 20;
  double overall_gap = 0.0;
  for (int sys = 0; sys < n_systems; ++sys) {
    LinearStateSpace model =
        random_stable_system(rng, config.state_dim, config.obs_dim);
    Vec x = gaussian_vector(rng, config.state_dim);
    BeliefState belief{Vec::Zero(config.state_dim),
                       Mat::Identity(config.state_dim, config.state_dim)};
    double system_gap = 0.0;
    for (int t = 0; t < config.steps; ++t) {
      Vec u = gaussian_vector(rng, model.control_dim(), 0.5);
      x = model.A * x + model.B * u +
          synth_linear_gaussian(rng(), 1, Vec::Zero(config.state_dim),
                                model.sigma1)[0];
      Vec o = model.C * x +
              synth_linear_gaussian(rng(), 1, Vec::Zero(config.obs_dim),
                                    model.sigma2)[0];
      BeliefState predicted = kf_project(belief, u, model);
      BeliefState corrected = kf_correct(predicted, o, model);
      // PC route: iterate the MAP objective under the same Gaussian prior
      // the filter uses, so the posteriors are directly comparable.
      Mat prior_prec = predicted.cov.llt().solve(
          Mat::Identity(config.state_dim, config.state_dim));
      Mat hessian =
          model.C.transpose() * model.sigma2.llt().solve(model.C) + prior_prec;
      Eigen::SelfAdjointEigenSolver<Mat> es(hessian, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      const double eta = 1.999 / (lo + hi);
      Vec pc_mean = pc_map_solve(predicted.mean, predicted.cov, o, model.C,
                                 model.sigma2, eta, 20000);
      system_gap =
          std::max(system_gap, (pc_mean - corrected.mean).cwiseAbs().maxCoeff());
      belief = corrected;
    }
    overall_gap = std::max(overall_gap, system_gap);
    MetricsRecord rec;
    rec.step = sys;
    rec.task_metric_name = "max_abs_gap";
    rec.task_metric_value = system_gap;
    maybe_append(metrics, rec, config.timing, start);
  }
  MetricsRecord rec;
  rec.step = n_systems;
  rec.task_metric_name = "max_abs_gap";
  rec.task_metric_value = overall_gap;
  maybe_append(metrics, rec, config.timing, start);
  SuiteSummary summary;
  summary.final_metric = overall_gap;
  summary.passed = overall_gap < 1e-6;
  return summary;
}

SuiteSummary run_backprop_compare(const ExperimentConfig& config,
                                  MetricsWriter* metrics) {
  const auto start = Clock::now();
  Rng rng(config.seed);
  // Three-layer tanh perceptron expressed as a computation graph.
  const std::vector<int> dims = {8, 16, 12, 4};
  ComputationGraph graph;
  Vertex input;
  input.kind = VertexKind::input;
  input.dim = dims[0];
  input.name = "x";
  graph.inputs.push_back(0);
  graph.vertices.push_back(input);
  int prev = 0;
  for (size_t l = 1; l < dims.size(); ++l) {
    Vertex lin;
    lin.kind = VertexKind::linear;
    lin.dim = dims[l];
    lin.parents = {prev};
    lin.theta = gaussian_matrix(rng, dims[l], dims[l - 1], 0.5);
    lin.name = "w" + std::to_string(l);
    graph.vertices.push_back(lin);
    Vertex act;
    act.kind = VertexKind::activation;
    act.dim = dims[l];
    act.parents = {static_cast<int>(graph.vertices.size()) - 1};
    act.act = ActivationKind::tanh_fn;
    act.name = "h" + std::to_string(l);
    graph.vertices.push_back(act);
    prev = static_cast<int>(graph.vertices.size()) - 1;
  }
  graph.output = prev;
  graph.loss = LossKind::sse;
  graph.target = gaussian_vector(rng, dims.back());

  ForwardResult fwd = forward_pass(graph, {gaussian_vector(rng, dims[0])});
  GradientResult oracle = reverse_oracle(graph, fwd);
  AugmentedGraph aug = AugmentedGraph::make(graph, fwd);
  RelaxOptions opts;
  opts.eta = 0.1;
  opts.iters = 200 * static_cast<int>(graph.vertices.size());
  pc_relax(aug, opts);
  auto weight_grads = pc_weight_update(aug);

  double gap = 0.0;
  for (size_t i = 0; i < graph.vertices.size(); ++i) {
    if (graph.vertices[i].kind == VertexKind::input) continue;
    gap = std::max(gap,
                   (aug.eps[i] - oracle.vertex_grad[i]).cwiseAbs().maxCoeff());
    if (weight_grads[i].size() > 0)
      gap = std::max(
          gap, (weight_grads[i] - oracle.theta_grad[i]).cwiseAbs().maxCoeff());
  }
  MetricsRecord rec;
  rec.step = 0;
  rec.task_metric_name = "max_abs_gradient_gap";
  rec.task_metric_value = gap;
  maybe_append(metrics, rec, config.timing, start);
  SuiteSummary summary;
  summary.final_metric = gap;
  summary.passed = gap < 1e-5;
  return summary;
}

SuiteSummary run_pid_compare(const ExperimentConfig& config,
                             MetricsWriter* metrics) {
  const auto start = Clock::now();
  const int n = config.steps;
  const double dt = config.dt;
  const double setpoint = 1.0;
  const Vec precs = (Vec(3) << 2.0, 1.5, 0.05).finished();

  // 1-D plant o' = a + disturbance, driven online by the first-order
  // controller; the observation stream is recorded for the offline replay.
  std::vector<double> obs;
  obs.reserve(n);
  double o = 0.0, action = 0.0, e_prev = 0.0, de_prev = 0.0;
  for (int t = 0; t < n; ++t) {
    double disturbance = 0.0;
    if (t >= n / 5) disturbance += 1.0;
    if (t >= n / 2) disturbance -= 2.0;
    if (t >= 3 * n / 4) disturbance += 0.5;
    o += dt * (action + disturbance);
    obs.push_back(o);
    const double e = o - setpoint;
    const double de = (e - e_prev) / dt;
    const double dde = (de - de_prev) / dt;
    action += -(precs[0] * e + precs[1] * de + precs[2] * dde) * dt;
    e_prev = e;
    de_prev = de;
  }

  std::vector<double> pc_actions = pc_pid_controller(obs, setpoint, precs, dt);
  std::vector<double> pid_actions = pid_derivative_control(
      obs, setpoint, /*k_p=*/precs[1], /*k_i=*/precs[0], /*k_d=*/precs[2], dt);

  double max_gap = 0.0, tracking = 0.0;
  for (int t = 0; t < n; ++t) {
    max_gap = std::max(max_gap, std::abs(pc_actions[t] - pid_actions[t]));
    tracking += std::abs(obs[t] - setpoint);
    if (metrics && (t % std::max(n / 100, 1) == 0)) {
      MetricsRecord rec;
      rec.step = t;
      rec.task_metric_name = "control_gap";
      rec.task_metric_value = std::abs(pc_actions[t] - pid_actions[t]);
      maybe_append(metrics, rec, config.timing, start);
    }
  }
  MetricsRecord rec;
  rec.step = n;
  rec.task_metric_name = "max_control_gap";
  rec.task_metric_value = max_gap;
  maybe_append(metrics, rec, config.timing, start);

  SuiteSummary summary;
  summary.final_metric = max_gap;
  summary.passed = max_gap < 1e-10;
  (void)tracking;
  return summary;
}

SuiteSummary run_precision_study(const ExperimentConfig& config,
                                 MetricsWriter* metrics) {
  const auto start = Clock::now();
  SuiteSummary summary;
  double worst = 0.0;
  long step = 0;
  for (double eps_val : {1.0, 8.0, 27.0}) {
    Mat sigma = Mat::Identity(1, 1);
    Vec eps = Vec::Constant(1, eps_val);
    for (int it = 0; it < 2000000; ++it) {
      Mat next = precision_step(sigma, eps, 0.001);
      const double change = std::abs(next(0, 0) - sigma(0, 0));
      sigma = next;
      if (change < 1e-13) break;
    }
    const double target = std::cbrt(eps_val * eps_val);
    const double gap = std::abs(sigma(0, 0) - target);
    worst = std::max(worst, gap);
    MetricsRecord rec;
    rec.step = step++;
    rec.task_metric_name = "fixed_point_gap";
    rec.task_metric_value = gap;
    maybe_append(metrics, rec, config.timing, start);
  }
  summary.passed = worst < 1e-6;

  // Monte-Carlo self-consistency at the unit fixed point.
  const int N = 100000;
  std::vector<Vec> samples;
  samples.reserve(N);
  Rng rng(config.seed);
  std::normal_distribution<double> d(0.0, 1.0);
  for (int i = 0; i < N; ++i) samples.push_back(Vec::Constant(1, d(rng)));
  const double residual =
      empirical_fixed_point_check(samples, Mat::Identity(1, 1));
  MetricsRecord rec;
  rec.step = step;
  rec.task_metric_name = "self_consistency_residual";
  rec.task_metric_value = residual;
  maybe_append(metrics, rec, config.timing, start);
  summary.passed = summary.passed && residual < 3.0 / std::sqrt(double(N));
  summary.final_metric = std::max(worst, residual);
  return summary;
}

int run_experiment(const ExperimentConfig& config) {
  try {
    config.validate();
    MetricsWriter* metrics = nullptr;
    std::unique_ptr<MetricsWriter> owned;
    if (!config.out.empty()) {
      owned = std::make_unique<MetricsWriter>(config.out);
      metrics = owned.get();
    }
    switch (config.kind) {
      case ExperimentKind::train:
        run_train_suite(config, metrics);
        break;
      case ExperimentKind::classify:
        run_classify_suite(config, metrics);
        break;
      case ExperimentKind::generate:
        run_generate_suite(config, metrics);
        break;
      case ExperimentKind::kalman_compare:
        run_kalman_compare(config, metrics);
        break;
      case ExperimentKind::backprop_compare:
        run_backprop_compare(config, metrics);
        break;
      case ExperimentKind::pid_compare:
        run_pid_compare(config, metrics);
        break;
      case ExperimentKind::precision_study:
        run_precision_study(config, metrics);
        break;
    }
    return 0;
  } catch (const DivergenceError&) {
    return 3;
  } catch (const std::invalid_argument&) {
    return 2;
  } catch (const FormatError&) {
    return 2;
  } catch (const std::domain_error&) {
    return 2;
  }
}

}  // namespace pcn
