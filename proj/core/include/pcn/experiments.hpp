#pragma once

#include "pcn/config.hpp"
#include "pcn/kalman.hpp"
#include "pcn/metrics.hpp"

namespace pcn {

// Deterministic Gaussian dataset with the given mean and covariance; the
// same seed always yields the same samples.
std::vector<Vec> synth_linear_gaussian(std::uint64_t seed, int n,
                                       const Vec& mean, const Mat& cov);

// Random stable linear state-space system (spectral radius < 0.9).
LinearStateSpace random_stable_system(Rng& rng, int state_dim, int obs_dim,
                                      int control_dim = 1);

// Per-suite drivers; each appends one record per logical step and returns
// the suite's summary figure.
struct SuiteSummary {
  double final_metric = 0.0;  // suite-specific (gap, accuracy, residual)
  bool passed = true;
};

SuiteSummary run_train_suite(const ExperimentConfig& config,
                             MetricsWriter* metrics);
SuiteSummary run_classify_suite(const ExperimentConfig& config,
                                MetricsWriter* metrics);
SuiteSummary run_generate_suite(const ExperimentConfig& config,
                                MetricsWriter* metrics);
SuiteSummary run_kalman_compare(const ExperimentConfig& config,
                                MetricsWriter* metrics);
SuiteSummary run_backprop_compare(const ExperimentConfig& config,
                                  MetricsWriter* metrics);
SuiteSummary run_pid_compare(const ExperimentConfig& config,
                             MetricsWriter* metrics);
SuiteSummary run_precision_study(const ExperimentConfig& config,
                                 MetricsWriter* metrics);

// Dispatches on config.kind, writes metrics to config.out when set, and
// maps outcomes to process exit codes: 0 success, 2 validation failure,
// 3 numerical divergence.
int run_experiment(const ExperimentConfig& config);

}  // namespace pcn
