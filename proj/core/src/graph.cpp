#include "pcn/graph.hpp"

#include <fstream>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace pcn {
namespace {

using nlohmann::json;

// Jacobian of child vertex j with respect to one of its parents, evaluated
// at the frozen forward values.
Mat frozen_jacobian(const Vertex& child, const std::vector<Vec>& values,
                    int parent_id) {
  switch (child.kind) {
    case VertexKind::input:
      throw StructuralError("input vertices have no parents");
    case VertexKind::linear:
      return child.theta;
    case VertexKind::activation: {
      const Vec& pre = values[parent_id];
      return activate_prime(child.act, pre).asDiagonal();
    }
    case VertexKind::sum:
      return Mat::Identity(child.dim, child.dim);
    case VertexKind::scale:
      return child.scale * Mat::Identity(child.dim, child.dim);
  }
  throw StructuralError("unknown vertex kind");
}

Vec loss_gradient(const ComputationGraph& graph, const Vec& v_out) {
  switch (graph.loss) {
    case LossKind::sum:
      return Vec::Ones(v_out.size());
    case LossKind::sse:
      return 2.0 * (v_out - graph.target);
  }
  throw StructuralError("unknown loss kind");
}

}  // namespace

std::vector<int> ComputationGraph::validate_and_sort() const {
  const int n = static_cast<int>(vertices.size());
  require(n > 0, "graph has no vertices");
  require(output >= 0 && output < n, "output vertex id out of range");

  std::vector<int> indegree(n, 0);
  std::vector<std::vector<int>> children(n);
  for (int i = 0; i < n; ++i) {
    const Vertex& v = vertices[i];
    require(v.dim >= 1, "vertex dimension must be >= 1");
    if (v.kind == VertexKind::input) {
      require(v.parents.empty(), "input vertices must have no parents");
    } else {
      require(!v.parents.empty(), "non-input vertex needs at least one parent");
    }
    if (v.kind == VertexKind::linear || v.kind == VertexKind::activation ||
        v.kind == VertexKind::scale)
      require(v.parents.size() == 1, "vertex kind takes exactly one parent");
    for (int p : v.parents) {
      require(p >= 0 && p < n && p != i, "bad parent id");
      children[p].push_back(i);
      ++indegree[i];
    }
    if (v.kind == VertexKind::linear) {
      require(v.theta.rows() == v.dim &&
                  v.theta.cols() == vertices[v.parents[0]].dim,
              "linear vertex weight shape mismatch");
    }
    if (v.kind == VertexKind::activation || v.kind == VertexKind::scale)
      require(v.dim == vertices[v.parents[0]].dim,
              "elementwise vertex must preserve dimension");
    if (v.kind == VertexKind::sum)
      for (int p : v.parents)
        require(vertices[p].dim == v.dim, "sum parents must share dimension");
  }
  require(children[output].empty(), "output vertex must have no children");
  if (loss == LossKind::sse)
    require(target.size() == vertices[output].dim,
            "loss target dimension mismatch");
  for (int id : inputs)
    require(id >= 0 && id < n && vertices[id].kind == VertexKind::input,
            "inputs list must name input vertices");

  std::vector<int> order;
  order.reserve(n);
  std::queue<int> ready;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push(i);
  while (!ready.empty()) {
    int i = ready.front();
    ready.pop();
    order.push_back(i);
    for (int c : children[i])
      if (--indegree[c] == 0) ready.push(c);
  }
  require(static_cast<int>(order.size()) == n, "graph contains a cycle");
  return order;
}

ForwardResult forward_pass(const ComputationGraph& graph,
                           const std::vector<Vec>& inputs) {
  auto order = graph.validate_and_sort();
  require(inputs.size() == graph.inputs.size(),
          "expected one value per input vertex");
  ForwardResult out;
  out.values.resize(graph.vertices.size());
  for (size_t k = 0; k < inputs.size(); ++k) {
    const Vertex& v = graph.vertices[graph.inputs[k]];
    require(inputs[k].size() == v.dim, "input value dimension mismatch");
    out.values[graph.inputs[k]] = inputs[k];
  }
  for (int id : order) {
    const Vertex& v = graph.vertices[id];
    switch (v.kind) {
      case VertexKind::input:
        require(out.values[id].size() == v.dim,
                "unbound input vertex: " + v.name);
        break;
      case VertexKind::linear:
        out.values[id] = v.theta * out.values[v.parents[0]];
        break;
      case VertexKind::activation:
        out.values[id] = activate(v.act, out.values[v.parents[0]]);
        break;
      case VertexKind::sum: {
        Vec acc = Vec::Zero(v.dim);
        for (int p : v.parents) acc += out.values[p];
        out.values[id] = acc;
        break;
      }
      case VertexKind::scale:
        out.values[id] = v.scale * out.values[v.parents[0]];
        break;
    }
  }
  const Vec& v_out = out.values[graph.output];
  if (graph.loss == LossKind::sum)
    out.loss = v_out.sum();
  else
    out.loss = (v_out - graph.target).squaredNorm();
  return out;
}

GradientResult reverse_oracle(const ComputationGraph& graph,
                              const ForwardResult& fwd) {
  auto order = graph.validate_and_sort();
  const int n = static_cast<int>(graph.vertices.size());
  GradientResult out;
  out.vertex_grad.resize(n);
  out.theta_grad.resize(n);
  for (int i = 0; i < n; ++i)
    out.vertex_grad[i] = Vec::Zero(graph.vertices[i].dim);
  out.vertex_grad[graph.output] =
      loss_gradient(graph, fwd.values[graph.output]);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int id = *it;
    const Vertex& v = graph.vertices[id];
    if (v.kind == VertexKind::input) continue;
    for (int p : v.parents) {
      Mat jac = frozen_jacobian(v, fwd.values, p);
      out.vertex_grad[p] += jac.transpose() * out.vertex_grad[id];
    }
    if (v.kind == VertexKind::linear)
      out.theta_grad[id] =
          out.vertex_grad[id] * fwd.values[v.parents[0]].transpose();
  }
  return out;
}

AugmentedGraph AugmentedGraph::make(const ComputationGraph& graph,
                                    const ForwardResult& fwd) {
  graph.validate_and_sort();
  AugmentedGraph aug;
  aug.graph = &graph;
  aug.v_hat = fwd.values;
  aug.v = fwd.values;
  aug.eps.resize(graph.vertices.size());
  for (size_t i = 0; i < graph.vertices.size(); ++i)
    aug.eps[i] = Vec::Zero(graph.vertices[i].dim);
  // Seed the output error with the exact loss gradient; at the relaxation
  // fixed point every other error equals the backpropagated gradient.
  aug.eps[graph.output] = loss_gradient(graph, fwd.values[graph.output]);
  return aug;
}

void pc_relax(AugmentedGraph& aug, const RelaxOptions& opts) {
  require(aug.graph != nullptr, "augmented graph is unbound");
  const ComputationGraph& graph = *aug.graph;
  auto order = graph.validate_and_sort();
  const int n = static_cast<int>(graph.vertices.size());

  std::vector<bool> clamped(n, false);
  for (int id : graph.inputs) clamped[id] = true;
  clamped[graph.output] = true;  // output error stays pinned to dL/dv_out

  std::vector<std::vector<std::pair<int, Mat>>> child_jacobians(n);
  for (int id = 0; id < n; ++id) {
    const Vertex& v = graph.vertices[id];
    for (int p : v.parents)
      child_jacobians[p].emplace_back(id, frozen_jacobian(v, aug.v_hat, p));
  }

  auto refresh_eps = [&](int i) {
    if (i == graph.output) return;  // seeded, not derived from v
    aug.eps[i] = aug.v[i] - aug.v_hat[i];
    if (!aug.weight.empty()) aug.eps[i] *= aug.weight[i];
  };
  for (int i = 0; i < n; ++i) refresh_eps(i);

  auto update_direction = [&](int i) {
    Vec dir = -aug.eps[i];
    for (const auto& [child, jac] : child_jacobians[i])
      dir += jac.transpose() * aug.eps[child];
    return dir;
  };

  for (int it = 1; it <= opts.iters; ++it) {
    double max_change = 0.0;
    if (opts.sequential) {
      for (auto rit = order.rbegin(); rit != order.rend(); ++rit) {
        const int i = *rit;
        if (clamped[i]) continue;
        Vec step = opts.eta * update_direction(i);
        aug.v[i] += step;
        refresh_eps(i);
        max_change = std::max(max_change, step.cwiseAbs().maxCoeff());
      }
    } else {
      std::vector<Vec> steps(n);
      for (int i = 0; i < n; ++i)
        if (!clamped[i]) steps[i] = opts.eta * update_direction(i);
      for (int i = 0; i < n; ++i) {
        if (clamped[i]) continue;
        aug.v[i] += steps[i];
        refresh_eps(i);
        max_change = std::max(max_change, steps[i].cwiseAbs().maxCoeff());
      }
    }
    for (int i = 0; i < n; ++i)
      if (!aug.v[i].allFinite() || !aug.eps[i].allFinite())
        throw DivergenceError("relaxation diverged at vertex " +
                              std::to_string(i) + " (iteration " +
                              std::to_string(it) + ")");
    if (max_change < opts.tol) break;
  }
  aug.relaxed = true;
}

std::vector<Mat> pc_weight_update(const AugmentedGraph& aug) {
  require(aug.graph != nullptr, "augmented graph is unbound");
  if (!aug.relaxed)
    throw std::logic_error("pc_weight_update called before pc_relax");
  const ComputationGraph& graph = *aug.graph;
  std::vector<Mat> grads(graph.vertices.size());
  for (size_t id = 0; id < graph.vertices.size(); ++id) {
    const Vertex& v = graph.vertices[id];
    if (v.kind != VertexKind::linear) continue;
    grads[id] = aug.eps[id] * aug.v_hat[v.parents[0]].transpose();
  }
  return grads;
}

ComputationGraph parse_graph(const std::string& json_text) {
  json doc = json::parse(json_text);
  require(doc.is_object() && doc.contains("vertices"),
          "graph document needs a 'vertices' array");

  ComputationGraph graph;
  std::unordered_map<std::string, int> id_of;
  for (const json& jv : doc.at("vertices")) {
    Vertex v;
    v.name = jv.at("name").get<std::string>();
    require(!id_of.count(v.name), "duplicate vertex name: " + v.name);
    const std::string kind = jv.at("kind").get<std::string>();
    if (kind == "input") v.kind = VertexKind::input;
    else if (kind == "linear") v.kind = VertexKind::linear;
    else if (kind == "activation") v.kind = VertexKind::activation;
    else if (kind == "sum") v.kind = VertexKind::sum;
    else if (kind == "scale") v.kind = VertexKind::scale;
    else throw StructuralError("unknown vertex kind: " + kind);
    v.dim = jv.at("dim").get<int>();
    if (jv.contains("parents"))
      for (const json& jp : jv.at("parents")) {
        const std::string pname = jp.get<std::string>();
        require(id_of.count(pname) > 0,
                "parent must be declared before use: " + pname);
        v.parents.push_back(id_of.at(pname));
      }
    if (v.kind == VertexKind::linear) {
      const json& jt = jv.at("theta");
      v.theta.resize(jt.size(), jt.at(0).size());
      for (size_t r = 0; r < jt.size(); ++r)
        for (size_t c = 0; c < jt.at(r).size(); ++c)
          v.theta(r, c) = jt.at(r).at(c).get<double>();
    }
    if (v.kind == VertexKind::activation)
      v.act = activation_from_string(jv.at("activation").get<std::string>());
    if (v.kind == VertexKind::scale) v.scale = jv.at("scale").get<double>();
    id_of[v.name] = static_cast<int>(graph.vertices.size());
    if (v.kind == VertexKind::input)
      graph.inputs.push_back(static_cast<int>(graph.vertices.size()));
    graph.vertices.push_back(std::move(v));
  }
  const std::string out_name = doc.at("output").get<std::string>();
  require(id_of.count(out_name) > 0, "unknown output vertex: " + out_name);
  graph.output = id_of.at(out_name);
  if (doc.contains("loss")) {
    const std::string loss = doc.at("loss").get<std::string>();
    if (loss == "sum") graph.loss = LossKind::sum;
    else if (loss == "sse") graph.loss = LossKind::sse;
    else throw StructuralError("unknown loss kind: " + loss);
  }
  if (graph.loss == LossKind::sse) {
    const json& jt = doc.at("target");
    graph.target.resize(jt.size());
    for (size_t i = 0; i < jt.size(); ++i)
      graph.target[i] = jt.at(i).get<double>();
  }
  graph.validate_and_sort();
  return graph;
}

ComputationGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open graph file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_graph(buf.str());
}

}  // namespace pcn
