#pragma once

#include <optional>

#include "pcn/network.hpp"
#include "pcn/relaxed.hpp"

namespace pcn {

// Clamping regimes. In the forward mode data sits at the bottom of the
// hierarchy and labels at the top; the backward mode inverts the network so
// labels sit at the bottom (d_0 = label dim) and data at the top.
enum class ClampMode { unsupervised, supervised_forward, supervised_backward };

ClampMode clamp_mode_from_string(const std::string& name);
std::string to_string(ClampMode m);

struct LabeledBatch {
  std::vector<Vec> inputs;
  std::optional<std::vector<Vec>> labels;  // one-hot rows, present iff supervised

  void validate(ClampMode mode) const;
};

// One-hot label vector with optional smoothing (mass 1 - s on the index,
// s / dim spread uniformly).
Vec one_hot(int index, int dim, double smoothing = 0.0);

// Sets mu and the clamp mask for one item. The label argument is required
// for the supervised modes and must be absent otherwise.
void apply_clamps(ClampMode mode, const Vec& input,
                  const std::optional<Vec>& label, NetworkState& state,
                  const NetworkSpec& spec);

struct TrainOptions {
  EmOptions em;
  // When set, inference uses the relaxed rules and psi/zeta learn alongside
  // theta at the M-step timescale.
  RelaxationFlags* relax = nullptr;
  double label_smoothing = 0.0;
};

// Inference loop that honours optional relaxation flags; identical to
// run_inference when flags is null.
InferenceResult run_inference_flags(NetworkState& state,
                                    const NetworkParams& params,
                                    const NetworkSpec& spec,
                                    const RelaxationFlags* flags);

// One EM pass over a labeled batch under the given clamp mode. Returns the
// post-update mean free energy.
EmResult em_epoch_mode(const LabeledBatch& batch, ClampMode mode,
                       NetworkParams& params, const NetworkSpec& spec,
                       Rng& rng, const TrainOptions& opts = {});

// Predicted label index. Forward mode: clamp data at the bottom, relax, and
// take the argmax over the top layer. Backward mode: clamp data at the top
// and take the argmax of a single downward prediction sweep. Ties break to
// the lowest index.
int classify(const Vec& item, const NetworkParams& params,
             const NetworkSpec& spec, ClampMode mode, Rng& rng,
             const RelaxationFlags* flags = nullptr);

// Synthesized observation for a label. Forward mode: one downward sweep
// from the clamped label. Backward mode: relax with the label clamped at
// the bottom and read the top layer.
Vec generate(const Vec& label, const NetworkParams& params,
             const NetworkSpec& spec, ClampMode mode, Rng& rng,
             const RelaxationFlags* flags = nullptr);

// Single downward prediction sweep from a clamped top layer.
Vec downward_sweep(const Vec& top, const NetworkParams& params,
                   const NetworkSpec& spec);

// Fraction of items whose classify output matches the label index.
double evaluate_accuracy(const std::vector<Vec>& items,
                         const std::vector<int>& label_indices,
                         const NetworkParams& params, const NetworkSpec& spec,
                         ClampMode mode, Rng& rng,
                         const RelaxationFlags* flags = nullptr);

}  // namespace pcn
