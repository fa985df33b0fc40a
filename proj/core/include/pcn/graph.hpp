#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pcn/activation.hpp"
#include "pcn/common.hpp"

namespace pcn {

// Vertex kinds of the computation graph. Every non-input vertex computes a
// differentiable function of its parents:
//   linear:     v = theta * parent            (single parent, owns theta)
//   activation: v = f(parent)                 (single parent)
//   sum:        v = sum of parents            (>= 1 parents, equal dims)
//   scale:      v = c * parent                (single parent, constant c)
enum class VertexKind { input, linear, activation, sum, scale };

struct Vertex {
  VertexKind kind = VertexKind::input;
  int dim = 0;
  std::vector<int> parents;
  Mat theta;                                       // linear only
  ActivationKind act = ActivationKind::identity;   // activation only
  double scale = 1.0;                              // scale only
  std::string name;
};

// Scalar loss attached to the output vertex.
enum class LossKind { sum, sse };

struct ComputationGraph {
  std::vector<Vertex> vertices;  // indices are vertex ids
  std::vector<int> inputs;       // ids of input vertices
  int output = -1;               // id of the single output vertex
  LossKind loss = LossKind::sum;
  Vec target;                    // sse only

  // Checks the DAG structure (parents precede children after sorting),
  // dimensions, and the output/no-children constraint; returns a
  // topological order of vertex ids.
  std::vector<int> validate_and_sort() const;
};

struct ForwardResult {
  std::vector<Vec> values;  // v_i per vertex
  double loss = 0.0;
};

ForwardResult forward_pass(const ComputationGraph& graph,
                           const std::vector<Vec>& inputs);

struct GradientResult {
  std::vector<Vec> vertex_grad;  // dL/dv_i
  std::vector<Mat> theta_grad;   // dL/dtheta_i (empty for non-linear vertices)
};

// Exact reverse-mode gradients, used as the reference the relaxation is
// checked against.
GradientResult reverse_oracle(const ComputationGraph& graph,
                              const ForwardResult& fwd);

// Error units laid over the graph with the forward predictions frozen:
// during relaxation each vertex value v_i moves while its prediction
// v_hat_i (and therefore every local Jacobian) stays fixed.
struct AugmentedGraph {
  const ComputationGraph* graph = nullptr;
  std::vector<Vec> v_hat;     // frozen predictions from the forward pass
  std::vector<Vec> v;         // relaxing values
  std::vector<Vec> eps;       // eps_i = v_i - v_hat_i (output seeded specially)
  bool relaxed = false;
  // Optional per-vertex error weights (experimental reweighting); empty
  // means identity.
  std::vector<double> weight;

  static AugmentedGraph make(const ComputationGraph& graph,
                             const ForwardResult& fwd);
};

struct RelaxOptions {
  double eta = 0.1;
  int iters = 500;
  double tol = 1e-10;
  bool sequential = false;  // update vertices one at a time in reverse order
};

// Relaxes the value units under the fixed-prediction flow
//   dv_i/dt = -eps_i + sum_{j in C(i)} J_ji' eps_j
// with eps_i = v_i - v_hat_i and frozen Jacobians J_ji = dv_hat_j/dv_i.
// The output vertex's error is pinned to dL/dv_out; input vertices stay
// clamped. At the fixed point eps_i equals the reverse-mode gradient.
void pc_relax(AugmentedGraph& aug, const RelaxOptions& opts = {});

// Parameter gradients read off the relaxed error units:
// dL/dtheta_i = eps_i * (local input)'. Throws if called before pc_relax.
std::vector<Mat> pc_weight_update(const AugmentedGraph& aug);

// Graph description in a structured text document:
// { "vertices": [ {"name", "kind", "dim", "parents": [names],
//                  "theta": [[..]], "activation", "scale"} ... ],
//   "output": name, "loss": "sum"|"sse", "target": [..] }
ComputationGraph load_graph(const std::string& path);
ComputationGraph parse_graph(const std::string& json_text);

}  // namespace pcn
