#include <benchmark/benchmark.h>

#include "pcn/experiments.hpp"
#include "pcn/graph.hpp"
#include "pcn/kalman.hpp"
#include "pcn/network.hpp"

namespace {

pcn::NetworkSpec make_spec(int width, int levels) {
  pcn::NetworkSpec spec;
  spec.layer_dims.assign(levels + 1, width);
  spec.activation.assign(levels, pcn::ActivationKind::tanh_fn);
  spec.prior_mean = pcn::Vec::Zero(width);
  return spec;
}

void BM_InferStep(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  pcn::Rng rng(7);
  pcn::NetworkSpec spec = make_spec(width, 3);
  pcn::NetworkParams params = pcn::NetworkParams::make(spec, rng);
  pcn::NetworkState net = pcn::NetworkState::zeros(spec);
  net.mu[0] = pcn::gaussian_vector(rng, width);
  net.clamped[0] = true;
  pcn::initialize_latents(net, params, spec, rng);
  pcn::compute_errors(net, params, spec);
  for (auto _ : state) {
    pcn::infer_step(net, params, spec);
    benchmark::DoNotOptimize(net.mu[1].data());
  }
}
BENCHMARK(BM_InferStep)->Arg(16)->Arg(64)->Arg(256);

void BM_KalmanStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  pcn::Rng rng(11);
  pcn::LinearStateSpace model = pcn::random_stable_system(rng, n, n);
  pcn::BeliefState belief{pcn::Vec::Zero(n), pcn::Mat::Identity(n, n)};
  pcn::Vec u = pcn::gaussian_vector(rng, 1);
  pcn::Vec o = pcn::gaussian_vector(rng, n);
  for (auto _ : state) {
    pcn::BeliefState next = pcn::kf_correct(pcn::kf_project(belief, u, model),
                                            o, model);
    benchmark::DoNotOptimize(next.mean.data());
  }
}
BENCHMARK(BM_KalmanStep)->Arg(4)->Arg(16)->Arg(64);

void BM_GraphRelax(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  pcn::Rng rng(13);
  pcn::ComputationGraph graph;
  pcn::Vertex input;
  input.kind = pcn::VertexKind::input;
  input.dim = width;
  input.name = "x";
  graph.vertices.push_back(input);
  graph.inputs.push_back(0);
  int prev = 0;
  for (int l = 0; l < 3; ++l) {
    pcn::Vertex lin;
    lin.kind = pcn::VertexKind::linear;
    lin.dim = width;
    lin.parents = {prev};
    lin.theta = pcn::gaussian_matrix(rng, width, width, 0.2);
    lin.name = "w" + std::to_string(l);
    graph.vertices.push_back(lin);
    pcn::Vertex act;
    act.kind = pcn::VertexKind::activation;
    act.dim = width;
    act.parents = {static_cast<int>(graph.vertices.size()) - 1};
    act.act = pcn::ActivationKind::tanh_fn;
    act.name = "h" + std::to_string(l);
    graph.vertices.push_back(act);
    prev = static_cast<int>(graph.vertices.size()) - 1;
  }
  graph.output = prev;
  graph.loss = pcn::LossKind::sum;
  pcn::ForwardResult fwd =
      pcn::forward_pass(graph, {pcn::gaussian_vector(rng, width)});
  for (auto _ : state) {
    pcn::AugmentedGraph aug = pcn::AugmentedGraph::make(graph, fwd);
    pcn::RelaxOptions opts;
    opts.iters = 50;
    opts.tol = 0.0;
    pcn::pc_relax(aug, opts);
    benchmark::DoNotOptimize(aug.eps[1].data());
  }
}
BENCHMARK(BM_GraphRelax)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
