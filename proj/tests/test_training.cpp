#include "doctest.h"
#include "pcn/training.hpp"
#include "test_util.hpp"

using namespace pcn;
using namespace pcn::testutil;

namespace {

// Two well-separated Gaussian clusters in 2-D, class c centered at e_c.
LabeledBatch two_cluster_batch(Rng& rng, int per_class, double spread = 0.05) {
  LabeledBatch batch;
  batch.labels.emplace();
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < per_class; ++i) {
      Vec x = Vec::Zero(2);
      x[c] = 1.0;
      x += gaussian_vector(rng, 2, spread);
      batch.inputs.push_back(x);
      batch.labels->push_back(one_hot(c, 2));
    }
  return batch;
}

NetworkSpec cluster_spec() {
  NetworkSpec spec;
  spec.layer_dims = {2, 4, 2};  // labels at the bottom, data at the top
  spec.activation = {ActivationKind::identity, ActivationKind::identity};
  spec.prior_mean = Vec::Zero(2);
  spec.step_size = 0.1;
  spec.weight_step_size = 0.5;
  spec.max_iters = 100;
  spec.tol = 1e-8;
  return spec;
}

}  // namespace

TEST_CASE("clamp-mode names round-trip") {
  for (ClampMode m : {ClampMode::unsupervised, ClampMode::supervised_forward,
                      ClampMode::supervised_backward})
    CHECK(clamp_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(clamp_mode_from_string("sideways"), StructuralError);
}

TEST_CASE("one-hot labels, plain and smoothed") {
  Vec plain = one_hot(2, 4);
  CHECK(plain[2] == doctest::Approx(1.0));
  CHECK(plain.sum() == doctest::Approx(1.0));
  Vec smooth = one_hot(1, 4, 0.2);
  CHECK(smooth[1] == doctest::Approx(0.8 + 0.2 / 4));
  CHECK(smooth[0] == doctest::Approx(0.2 / 4));
  CHECK(smooth.sum() == doctest::Approx(1.0));
}

TEST_CASE("clamp layout per mode") {
  NetworkSpec spec = cluster_spec();
  NetworkState state = NetworkState::zeros(spec);
  Vec data = (Vec(2) << 0.3, 0.7).finished();
  Vec label = one_hot(1, 2);

  SUBCASE("backward: labels at the bottom, data at the top") {
    apply_clamps(ClampMode::supervised_backward, data, label, state, spec);
    CHECK((state.mu[0] - label).cwiseAbs().maxCoeff() == 0.0);
    CHECK((state.mu[2] - data).cwiseAbs().maxCoeff() == 0.0);
    CHECK(state.clamped[0]);
    CHECK(!state.clamped[1]);
    CHECK(state.clamped[2]);
  }
  SUBCASE("forward: data at the bottom, labels at the top") {
    apply_clamps(ClampMode::supervised_forward, data, label, state, spec);
    CHECK((state.mu[0] - data).cwiseAbs().maxCoeff() == 0.0);
    CHECK((state.mu[2] - label).cwiseAbs().maxCoeff() == 0.0);
    CHECK(state.clamped[0]);
    CHECK(state.clamped[2]);
  }
  SUBCASE("unsupervised: only the observation is pinned") {
    apply_clamps(ClampMode::unsupervised, data, std::nullopt, state, spec);
    CHECK((state.mu[0] - data).cwiseAbs().maxCoeff() == 0.0);
    CHECK(state.clamped[0]);
    CHECK(!state.clamped[2]);
  }
  SUBCASE("label presence is enforced") {
    CHECK_THROWS_AS(apply_clamps(ClampMode::supervised_backward, data,
                                 std::nullopt, state, spec),
                    StructuralError);
    CHECK_THROWS_AS(
        apply_clamps(ClampMode::unsupervised, data, label, state, spec),
        StructuralError);
  }
}

TEST_CASE("batch validation catches shape mismatches") {
  Rng rng(701);
  LabeledBatch batch = two_cluster_batch(rng, 3);
  batch.validate(ClampMode::supervised_backward);
  batch.labels->pop_back();
  CHECK_THROWS_AS(batch.validate(ClampMode::supervised_backward),
                  StructuralError);
  batch.labels.reset();
  CHECK_THROWS_AS(batch.validate(ClampMode::supervised_forward),
                  StructuralError);
  batch.validate(ClampMode::unsupervised);
}

TEST_CASE("null relaxation flags reproduce the plain inference loop") {
  Rng rng(702);
  RandomNet net = random_net(rng);
  net.state.clamped[0] = true;
  NetworkState a = net.state, b = net.state;
  InferenceResult ra = run_inference(a, net.params, net.spec);
  InferenceResult rb = run_inference_flags(b, net.params, net.spec, nullptr);
  CHECK(ra.iterations == rb.iterations);
  for (size_t l = 0; l < a.mu.size(); ++l)
    CHECK((a.mu[l] - b.mu[l]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("downward sweep composes the layer predictions") {
  Rng rng(703);
  NetworkSpec spec;
  spec.layer_dims = {3, 4, 2};
  spec.activation = {ActivationKind::tanh_fn, ActivationKind::identity};
  spec.prior_mean = Vec::Zero(2);
  NetworkParams params = NetworkParams::make(spec, rng);
  Vec top = gaussian_vector(rng, 2);
  Vec manual = activate(ActivationKind::tanh_fn,
                        Vec(params.theta[1] * (params.theta[2] * top)));
  CHECK((downward_sweep(top, params, spec) - manual).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("classification ties break to the lowest index") {
  NetworkSpec spec = cluster_spec();
  NetworkParams params;
  params.theta = {Mat(), Mat::Zero(2, 4), Mat::Zero(4, 2)};
  params.precision = {Mat::Identity(2, 2), Mat::Identity(4, 4),
                      Mat::Identity(2, 2)};
  Rng rng(704);
  CHECK(classify((Vec(2) << 0.4, 0.6).finished(), params, spec,
                 ClampMode::supervised_backward, rng) == 0);
}

TEST_CASE("training separates two Gaussian clusters") {
  Rng rng(705);
  LabeledBatch train = two_cluster_batch(rng, 20);
  LabeledBatch test = two_cluster_batch(rng, 20);
  std::vector<int> test_idx;
  for (const Vec& l : *test.labels)
    test_idx.push_back(l[0] > l[1] ? 0 : 1);

  auto run = [&](bool use_psi, bool drop_derivative) {
    Rng train_rng(706);
    NetworkSpec spec = cluster_spec();
    NetworkParams params = NetworkParams::make(spec, train_rng);
    RelaxationFlags flags = RelaxationFlags::make(spec, use_psi,
                                                  drop_derivative, false,
                                                  train_rng);
    TrainOptions opts;
    if (use_psi || drop_derivative) opts.relax = &flags;
    double prev = 1e300;
    for (int epoch = 0; epoch < 40; ++epoch) {
      EmResult r = em_epoch_mode(train, ClampMode::supervised_backward, params,
                                 spec, train_rng, opts);
      if (epoch > 0 && epoch % 10 == 0)
        CHECK(r.mean_free_energy < prev + 1e-6);
      prev = r.mean_free_energy;
    }
    return evaluate_accuracy(test.inputs, test_idx, params, spec,
                             ClampMode::supervised_backward, train_rng,
                             opts.relax);
  };

  CHECK(run(false, false) == doctest::Approx(1.0));
  CHECK(run(true, false) == doctest::Approx(1.0));
  CHECK(run(false, true) == doctest::Approx(1.0));
}

TEST_CASE("forward-mode generation is one downward sweep from the label") {
  Rng rng(707);
  NetworkSpec spec = cluster_spec();
  NetworkParams params = NetworkParams::make(spec, rng);
  Vec label = one_hot(1, 2);
  Vec gen = generate(label, params, spec, ClampMode::supervised_forward, rng);
  CHECK((gen - downward_sweep(label, params, spec)).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("accuracy evaluation agrees with per-item classification") {
  Rng rng(708);
  NetworkSpec spec = cluster_spec();
  NetworkParams params = NetworkParams::make(spec, rng);
  LabeledBatch batch = two_cluster_batch(rng, 5);
  std::vector<int> idx;
  int hits = 0;
  for (size_t i = 0; i < batch.inputs.size(); ++i) {
    idx.push_back((*batch.labels)[i][0] > (*batch.labels)[i][1] ? 0 : 1);
    Rng item_rng(709);
    if (classify(batch.inputs[i], params, spec, ClampMode::supervised_backward,
                 item_rng) == idx.back())
      ++hits;
  }
  Rng eval_rng(709);
  double acc = evaluate_accuracy(batch.inputs, idx, params, spec,
                                 ClampMode::supervised_backward, eval_rng);
  CHECK(acc == doctest::Approx(double(hits) / double(batch.inputs.size())));
}
