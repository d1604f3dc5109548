#include "caltype/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "caltype/adaboost.hpp"
#include "caltype/rng.hpp"

namespace caltype {

double cross_entropy(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size())
    throw ValidationError("cross_entropy: target " + std::to_string(target) +
                          " out of range for " + std::to_string(probs.size()) +
                          " classes");
  double p = std::max(probs[target], 1e-15);
  return -std::log(p);
}

// -------------------------------------------------------------------- Adam

Adam::Adam(const std::vector<Tensor*>& params, AdamConfig config)
    : config_(config) {
  if (!(config.lr > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 ||
      config.beta2 < 0.0 || config.beta2 >= 1.0)
    throw ValidationError("adam: lr must be positive and betas in [0, 1)");
  for (const Tensor* t : params) {
    m_.emplace_back(t->value.rows(), t->value.cols());
    v_.emplace_back(t->value.rows(), t->value.cols());
  }
}

void Adam::apply(const std::vector<Tensor*>& params) {
  if (params.size() != m_.size())
    throw ShapeError("adam: parameter list does not match optimizer state");
  ++step_count_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p];
    if (!t.value.same_shape(m_[p]))
      throw ShapeError("adam: parameter shape changed");
    for (std::size_t i = 0; i < t.value.size(); ++i) {
      double g = t.grad[i];
      m_[p][i] = b1 * m_[p][i] + (1.0 - b1) * g;
      v_[p][i] = b2 * v_[p][i] + (1.0 - b2) * g * g;
      double m_hat = m_[p][i] / bc1;
      double v_hat = v_[p][i] / bc2;
      t.value[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

// ------------------------------------------------------------------ splits

std::vector<SplitPlan> make_splits(std::size_t dataset_size, std::size_t n_splits,
                                   std::size_t n_train, std::size_t n_test,
                                   std::uint64_t master_seed) {
  if (n_train + n_test > dataset_size)
    throw ValidationError("make_splits: " + std::to_string(n_train) + " + " +
                          std::to_string(n_test) + " examples requested from " +
                          std::to_string(dataset_size));
  if (n_train == 0) throw ValidationError("make_splits: empty training portion");
  std::vector<SplitPlan> plans;
  for (std::size_t s = 0; s < n_splits; ++s) {
    SplitPlan plan;
    plan.seed = derive_seed(master_seed, 0x5b, s);
    std::vector<std::size_t> order(dataset_size);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(plan.seed);
    rng.shuffle(order);
    plan.train_indices.assign(order.begin(), order.begin() + n_train);
    plan.test_indices.assign(order.begin() + n_train, order.begin() + n_train + n_test);
    plans.push_back(std::move(plan));
  }
  return plans;
}

// ------------------------------------------------------------------- train

std::size_t env_thread_count() {
  const char* env = std::getenv("CALTYPE_THREADS");
  if (!env) return 0;
  long v = std::atol(env);
  return v > 0 ? static_cast<std::size_t>(v) : 0;
}

namespace {

Dataset subset_view(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(data[i]);
  return out;
}

struct ExampleResult {
  double loss = 0.0;
  bool correct = false;
};

// Forward/backward one example into net's gradient buffers.
ExampleResult process_example(Network& net, const NormStats& norm,
                              const LabeledTimeseries& ex,
                              std::uint64_t dropout_seed) {
  net.reseed_dropout(dropout_seed);
  auto z = zscore_apply(norm, ex.signal);
  auto probs = net.forward(z);
  std::size_t target = static_cast<std::size_t>(ex.label);
  ExampleResult r;
  r.loss = cross_entropy(probs, target);
  std::size_t argmax = 0;
  for (std::size_t c = 1; c < probs.size(); ++c)
    if (probs[c] > probs[argmax]) argmax = c;
  r.correct = argmax == target;
  net.backward(probs, target);
  return r;
}

} // namespace

TrainResult train(const ModelSpec& spec, const Dataset& data,
                  const SplitPlan& split, const TrainOptions& options) {
  using clock = std::chrono::steady_clock;
  for (std::size_t i : split.train_indices)
    if (i >= data.size())
      throw ValidationError("train: split index out of range");
  for (std::size_t i : split.test_indices)
    if (i >= data.size())
      throw ValidationError("train: split index out of range");
  if (split.train_indices.empty())
    throw ValidationError("train: empty training portion");
  if (options.batch_size < 1)
    throw ValidationError("train: batch size must be >= 1");

  const std::size_t n = data[split.train_indices[0]].signal.size();
  spec.validate(n);
  for (std::size_t i : split.train_indices)
    if (data[i].signal.size() != n)
      throw ValidationError("train: ragged trace lengths in training portion");

  TrainResult result;
  result.model.spec = spec;
  result.model.input_length = n;
  result.report.seed = options.seed;

  const auto t_start = clock::now();
  // Normalization statistics come from the training portion only.
  result.model.norm = zscore_fit(subset_view(data, split.train_indices));

  if (spec.family == Family::kAdaBoost) {
    result.model.ensemble = std::make_shared<StumpEnsemble>(adaboost_train(
        data, split.train_indices, spec.rounds, spec.classes, options.seed));
  } else {
    auto net = std::make_unique<Network>(spec, n, derive_seed(options.seed, 1));
    Adam adam(net->params(), options.adam);

    const std::size_t threads =
        std::max<std::size_t>(1, std::min(options.threads == 0 ? 1 : options.threads,
                                          split.train_indices.size()));
    std::vector<std::unique_ptr<Network>> workers;
    for (std::size_t w = 1; w < threads; ++w) workers.push_back(net->clone());

    std::vector<std::size_t> order = split.train_indices;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
      const auto t_epoch = clock::now();
      Rng shuffle_rng(derive_seed(options.seed, 2, epoch));
      shuffle_rng.shuffle(order);
      net->set_training(true);
      for (auto& w : workers) w->set_training(true);

      double loss_sum = 0.0;
      std::size_t correct = 0;
      for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
        const std::size_t end = std::min(begin + options.batch_size, order.size());
        const std::size_t count = end - begin;
        net->zero_grads();
        std::vector<ExampleResult> results(count);

        if (threads == 1 || count < 2 * threads) {
          for (std::size_t k = 0; k < count; ++k) {
            std::size_t idx = order[begin + k];
            results[k] = process_example(*net, result.model.norm, data[idx],
                                         derive_seed(options.seed, epoch, idx));
          }
        } else {
          // Contiguous chunks; gradients reduced in fixed worker order.
          std::vector<std::size_t> bounds(threads + 1);
          for (std::size_t w = 0; w <= threads; ++w)
            bounds[w] = begin + w * count / threads;
          auto run_chunk = [&](Network& worker, std::size_t lo, std::size_t hi) {
            for (std::size_t k = lo; k < hi; ++k) {
              std::size_t idx = order[k];
              results[k - begin] = process_example(
                  worker, result.model.norm, data[idx],
                  derive_seed(options.seed, epoch, idx));
            }
            worker.flush_grads();
          };
          for (auto& w : workers) {
            w->copy_params_from(*net);
            w->zero_grads();
          }
          std::vector<std::thread> pool;
          for (std::size_t w = 1; w < threads; ++w)
            pool.emplace_back(run_chunk, std::ref(*workers[w - 1]), bounds[w], bounds[w + 1]);
          run_chunk(*net, bounds[0], bounds[1]);
          for (auto& t : pool) t.join();
          auto master = net->params();
          for (auto& w : workers) {
            auto wp = w->params();
            for (std::size_t p = 0; p < master.size(); ++p)
              master[p]->grad += wp[p]->grad;
          }
        }

        for (const auto& r : results) {
          loss_sum += r.loss;
          correct += r.correct ? 1 : 0;
        }
        net->flush_grads();
        net->scale_grads(1.0 / static_cast<double>(count));
        if (net->is_recurrent() && options.clip_norm > 0.0)
          clip_gradients(net->params(), options.clip_norm);
        adam.apply(net->params());
      }
      result.report.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
      result.report.epoch_accuracy.push_back(static_cast<double>(correct) /
                                             static_cast<double>(order.size()));
      result.report.epoch_seconds.push_back(
          std::chrono::duration<double>(clock::now() - t_epoch).count());
    }
    net->set_training(false);
    result.report.optimizer_steps = adam.step_count();
    result.model.net = std::move(net);
  }

  result.report.train_seconds =
      std::chrono::duration<double>(clock::now() - t_start).count();

  if (!split.test_indices.empty()) {
    auto preds = predict_all(result.model, data, split.test_indices, options.threads);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < preds.size(); ++k)
      if (preds[k] == static_cast<std::size_t>(data[split.test_indices[k]].label))
        ++correct;
    result.report.test_accuracy =
        static_cast<double>(correct) / static_cast<double>(preds.size());
  }
  result.report.model_fingerprint = result.model.fingerprint();
  return result;
}

std::vector<std::size_t> predict_all(const TrainedModel& model, const Dataset& data,
                                     std::span<const std::size_t> indices,
                                     std::size_t threads) {
  std::vector<std::size_t> preds(indices.size());
  if (model.ensemble) {
    for (std::size_t k = 0; k < indices.size(); ++k)
      preds[k] = model.ensemble->predict(data[indices[k]].signal);
    return preds;
  }
  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min(threads == 0 ? 1 : threads, indices.size()));
  auto run = [&](Network& net, std::size_t lo, std::size_t hi) {
    net.set_training(false);
    for (std::size_t k = lo; k < hi; ++k) {
      auto z = zscore_apply(model.norm, data[indices[k]].signal);
      auto probs = net.forward(z);
      std::size_t argmax = 0;
      for (std::size_t c = 1; c < probs.size(); ++c)
        if (probs[c] > probs[argmax]) argmax = c;
      preds[k] = argmax;
    }
  };
  if (n_threads == 1) {
    run(*model.net, 0, indices.size());
  } else {
    std::vector<std::unique_ptr<Network>> nets;
    for (std::size_t w = 1; w < n_threads; ++w) nets.push_back(model.net->clone());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < n_threads; ++w)
      pool.emplace_back(run, std::ref(*nets[w - 1]), w * indices.size() / n_threads,
                        (w + 1) * indices.size() / n_threads);
    run(*model.net, 0, indices.size() / n_threads);
    for (auto& t : pool) t.join();
  }
  return preds;
}

} // namespace caltype
