#include "doctest.h"

#include <cmath>
#include <set>

#include "caltype/rng.hpp"
#include "caltype/training.hpp"

using namespace caltype;

TEST_SUITE_BEGIN("training");

TEST_CASE("cross entropy closed forms") {
  std::vector<double> perfect = {1, 0, 0, 0};
  CHECK(cross_entropy(perfect, 0) == doctest::Approx(0.0).epsilon(1e-12));
  std::vector<double> uniform(4, 0.25);
  for (std::size_t t = 0; t < 4; ++t)
    CHECK(cross_entropy(uniform, t) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy(uniform, 4), ValidationError);
}

TEST_CASE("softmax cross-entropy logit gradient matches finite differences") {
  Rng rng(51);
  const double h = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> logits(4);
    for (double& v : logits) v = rng.uniform(-3, 3);
    std::size_t target = static_cast<std::size_t>(rng.below(4));
    auto probs = softmax(logits);
    for (std::size_t i = 0; i < 4; ++i) {
      double analytic = probs[i] - (i == target ? 1.0 : 0.0);
      std::vector<double> up = logits, down = logits;
      up[i] += h;
      down[i] -= h;
      double fd = (cross_entropy(softmax(up), target) -
                   cross_entropy(softmax(down), target)) / (2 * h);
      CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

namespace {

std::vector<Tensor*> single_param(Tensor& t) { return {&t}; }

} // namespace

TEST_CASE("adam zero gradient leaves parameters; step count advances") {
  Tensor t(2, 2);
  t.value.fill(1.5);
  Adam adam(single_param(t));
  adam.apply(single_param(t));
  adam.apply(single_param(t));
  CHECK(adam.step_count() == 2);
  for (std::size_t i = 0; i < t.value.size(); ++i) CHECK(t.value[i] == 1.5);
}

TEST_CASE("adam first step is bounded by the learning rate") {
  Tensor t(1, 1);
  t.value(0, 0) = 0.7;
  t.grad(0, 0) = 3.21;
  AdamConfig cfg;
  Adam adam(single_param(t), cfg);
  adam.apply(single_param(t));
  double delta = std::fabs(t.value(0, 0) - 0.7);
  CHECK(delta < cfg.lr);
  CHECK(delta == doctest::Approx(cfg.lr * 3.21 / (3.21 + cfg.epsilon)).epsilon(1e-9));
}

TEST_CASE("adam minimizes theta^2 monotonically over three steps") {
  Tensor t(1, 1);
  t.value(0, 0) = 1.0;
  Adam adam(single_param(t));
  double prev = 1.0;
  for (int step = 0; step < 3; ++step) {
    t.grad(0, 0) = 2.0 * t.value(0, 0);
    adam.apply(single_param(t));
    double f = t.value(0, 0) * t.value(0, 0);
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("adam defaults mirror the training protocol") {
  AdamConfig cfg;
  CHECK(cfg.lr == 1e-3);
  CHECK(cfg.beta1 == 0.9);
  CHECK(cfg.beta2 == 0.99);
  CHECK(cfg.epsilon == 1e-8);
}

TEST_CASE("make_splits is deterministic and disjoint") {
  auto a = make_splits(100, 4, 60, 30, 17);
  auto b = make_splits(100, 4, 60, 30, 17);
  REQUIRE(a.size() == 4);
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(a[s].train_indices == b[s].train_indices);
    CHECK(a[s].test_indices == b[s].test_indices);
    std::set<std::size_t> train(a[s].train_indices.begin(), a[s].train_indices.end());
    CHECK(train.size() == 60);
    for (std::size_t i : a[s].test_indices) CHECK(train.count(i) == 0);
    CHECK(a[s].test_indices.size() == 30);
  }
  // different splits differ
  CHECK(a[0].train_indices != a[1].train_indices);
}

TEST_CASE("3157/790 splits over 3947 examples are exhaustive") {
  auto splits = make_splits(3947, 10, 3157, 790, 7);
  REQUIRE(splits.size() == 10);
  for (const auto& s : splits) {
    std::set<std::size_t> all(s.train_indices.begin(), s.train_indices.end());
    all.insert(s.test_indices.begin(), s.test_indices.end());
    CHECK(all.size() == 3947); // disjoint and covering
    CHECK(*all.rbegin() == 3946);
  }
}

TEST_CASE("make_splits rejects insufficient data") {
  CHECK_THROWS_AS(make_splits(50, 1, 40, 20, 3), ValidationError);
}

namespace {

// Tiny margin-separated two-class dataset on 4-point traces.
Dataset separable_dataset(std::size_t n_per_class) {
  Dataset data;
  Rng rng(61);
  for (std::size_t k = 0; k < n_per_class; ++k) {
    std::vector<double> lo(4), hi(4);
    for (std::size_t i = 0; i < 4; ++i) {
      lo[i] = -1.0 + 0.1 * rng.normal();
      hi[i] = 1.0 + 0.1 * rng.normal();
    }
    data.push_back({lo, CellType::kPY, 0});
    data.push_back({hi, CellType::kPV, 0});
  }
  return data;
}

SplitPlan whole_as_train(std::size_t n, std::size_t n_test) {
  SplitPlan plan;
  for (std::size_t i = 0; i < n - n_test; ++i) plan.train_indices.push_back(i);
  for (std::size_t i = n - n_test; i < n; ++i) plan.test_indices.push_back(i);
  return plan;
}

ModelSpec dense_only_spec() {
  ModelSpec spec;
  spec.family = Family::kCnn; // empty layer list = flatten + dense head
  return spec;
}

} // namespace

TEST_CASE("zero-epoch training returns the initialized model") {
  Dataset data = separable_dataset(10);
  TrainOptions opt;
  opt.epochs = 0;
  opt.seed = 5;
  auto result = train(dense_only_spec(), data, whole_as_train(data.size(), 4), opt);
  CHECK(result.report.epoch_loss.empty());
  CHECK(result.report.epoch_accuracy.empty());
  CHECK(result.report.optimizer_steps == 0);
  CHECK(result.model.net != nullptr);
}

TEST_CASE("dense-only model drives a separable set to full training accuracy") {
  Dataset data = separable_dataset(20);
  TrainOptions opt;
  opt.epochs = 100;
  opt.adam.lr = 0.05; // small set, one batch per epoch: take bigger steps
  opt.seed = 5;
  auto result = train(dense_only_spec(), data, whole_as_train(data.size(), 8), opt);
  CHECK(result.report.epoch_accuracy.back() == doctest::Approx(1.0));
  CHECK(result.report.test_accuracy == doctest::Approx(1.0));
}

TEST_CASE("fixed seed reproduces a bit-identical model") {
  Dataset data = separable_dataset(12);
  TrainOptions opt;
  opt.epochs = 3;
  opt.seed = 77;
  auto a = train(dense_only_spec(), data, whole_as_train(data.size(), 4), opt);
  auto b = train(dense_only_spec(), data, whole_as_train(data.size(), 4), opt);
  CHECK(a.model.fingerprint() == b.model.fingerprint());
  auto pa = a.model.net->params();
  auto pb = b.model.net->params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
}

TEST_CASE("optimizer step count equals batches times epochs") {
  Dataset data = separable_dataset(24); // 48 examples
  TrainOptions opt;
  opt.epochs = 4;
  opt.batch_size = 32;
  opt.seed = 9;
  auto result = train(dense_only_spec(), data, whole_as_train(data.size(), 8), opt);
  // 40 train examples, batch 32 -> 2 batches per epoch
  CHECK(result.report.optimizer_steps == 8);
}

TEST_CASE("test data is a canary: perturbing it never touches training") {
  Dataset data = separable_dataset(12);
  auto plan = whole_as_train(data.size(), 6);
  TrainOptions opt;
  opt.epochs = 3;
  opt.seed = 31;
  auto base = train(dense_only_spec(), data, plan, opt);

  Dataset poked = data;
  for (std::size_t i : plan.test_indices)
    for (double& v : poked[i].signal) v += 100.0;
  auto poked_result = train(dense_only_spec(), poked, plan, opt);
  CHECK(base.model.fingerprint() == poked_result.model.fingerprint());
  CHECK(base.model.norm.mean == poked_result.model.norm.mean);
  CHECK(base.model.norm.std == poked_result.model.norm.std);
}

TEST_CASE("training loss is non-increasing early on for most seeds") {
  Dataset data = separable_dataset(16);
  std::size_t ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainOptions opt;
    opt.epochs = 5;
    opt.seed = seed;
    auto result = train(dense_only_spec(), data, whole_as_train(data.size(), 8), opt);
    bool monotone = true;
    for (std::size_t e = 1; e < result.report.epoch_loss.size(); ++e)
      if (result.report.epoch_loss[e] > result.report.epoch_loss[e - 1])
        monotone = false;
    if (monotone) ++ok;
  }
  CHECK(ok >= 9);
}

TEST_CASE("threaded training matches its own reruns") {
  Dataset data = separable_dataset(16);
  TrainOptions opt;
  opt.epochs = 2;
  opt.seed = 21;
  opt.threads = 3;
  auto a = train(dense_only_spec(), data, whole_as_train(data.size(), 8), opt);
  auto b = train(dense_only_spec(), data, whole_as_train(data.size(), 8), opt);
  CHECK(a.model.fingerprint() == b.model.fingerprint());
}

TEST_CASE("predict_all agrees between threaded and sequential evaluation") {
  Dataset data = separable_dataset(16);
  TrainOptions opt;
  opt.epochs = 2;
  opt.seed = 22;
  auto result = train(dense_only_spec(), data, whole_as_train(data.size(), 8), opt);
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  CHECK(predict_all(result.model, data, all, 0) ==
        predict_all(result.model, data, all, 4));
}

TEST_SUITE_END();
