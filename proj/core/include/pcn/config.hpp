#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcn/network.hpp"
#include "pcn/precision.hpp"
#include "pcn/training.hpp"

namespace pcn {

enum class ExperimentKind {
  train,
  classify,
  generate,
  kalman_compare,
  backprop_compare,
  pid_compare,
  precision_study,
};

ExperimentKind experiment_kind_from_string(const std::string& name);
std::string to_string(ExperimentKind k);

// Full run description. Parsed from a JSON document; unknown keys are
// rejected and numeric ranges validated at parse time.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::train;

  // Network layout (train / classify / generate).
  std::vector<int> layer_dims;
  std::vector<std::string> activations;
  double step_size = 0.05;
  double weight_step_size = 0.01;
  int max_iters = 100;
  double tol = 1e-6;
  bool warm_start = true;

  ClampMode clamp_mode = ClampMode::supervised_backward;
  bool use_psi = false;
  bool drop_derivative = false;
  bool use_zeta = false;
  PrecisionMode precision_mode = PrecisionMode::fixed;
  double weight_decay = 0.0;
  double label_smoothing = 0.0;

  // Dataset (IDX paths; empty means a built-in synthetic source).
  std::string train_images, train_labels, test_images, test_labels;
  int train_count = 0;  // 0 = use everything available
  int test_count = 0;
  int epochs = 10;
  int batch_size = 50;

  // Model persistence for classify/generate.
  std::string model_in, model_out;

  // Comparison-suite knobs.
  int steps = 100;       // kalman / pid / precision trajectory length
  int state_dim = 4;     // kalman
  int obs_dim = 3;       // kalman
  double dt = 0.01;      // pid

  std::uint64_t seed = 0;
  std::string out;       // metrics path; empty = stdout only
  bool timing = false;   // emit wall-clock fields (breaks byte determinism)

  // Builds the network description from the fields above.
  NetworkSpec to_network_spec() const;
  void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Applies "key=value" strings on top of a JSON document before parsing;
// values are parsed as JSON when possible, otherwise taken as strings.
std::string apply_overrides(const std::string& json_text,
                            const std::vector<std::string>& overrides);

// Parameter persistence (weights and precisions) as a JSON document.
void save_params(const std::string& path, const NetworkParams& params);
NetworkParams load_params(const std::string& path);

}  // namespace pcn
