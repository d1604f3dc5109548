#pragma once

#include <cstdint>
#include <vector>

#include "caltype/model.hpp"

namespace caltype {

/// -log(probs[target]), probabilities clamped at 1e-15.
double cross_entropy(std::span<const double> probs, std::size_t target);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99; // as configured for all experiments
  double epsilon = 1e-8;
};

/// Adam with bias correction. Moment tensors mirror the parameter shapes;
/// step_count advances by exactly one per apply().
class Adam {
public:
  Adam(const std::vector<Tensor*>& params, AdamConfig config = {});

  /// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), reading Tensor::grad.
  void apply(const std::vector<Tensor*>& params);

  std::size_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }

private:
  AdamConfig config_;
  std::size_t step_count_ = 0;
  std::vector<Matrix> m_, v_;
};

/// One train/test split: disjoint index sets into a dataset.
struct SplitPlan {
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

/// Independently seeded shuffles (seed_i = hash(master_seed, i)).
std::vector<SplitPlan> make_splits(std::size_t dataset_size, std::size_t n_splits,
                                   std::size_t n_train, std::size_t n_test,
                                   std::uint64_t master_seed);

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double clip_norm = 5.0; // recurrent families only; <= 0 disables
  AdamConfig adam;
  std::size_t threads = 0; // 0 = single-threaded deterministic mode
};

struct TrainReport {
  std::vector<double> epoch_loss;     // mean train loss per epoch
  std::vector<double> epoch_accuracy; // train accuracy per epoch
  std::vector<double> epoch_seconds;
  double test_accuracy = 0.0;
  double train_seconds = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t model_fingerprint = 0;
  std::size_t optimizer_steps = 0;
};

struct TrainResult {
  TrainedModel model;
  TrainReport report;
};

/// Fits z-score stats on the training portion only, then runs the
/// shuffled mini-batch epoch loop (forward / backward / Adam per batch).
TrainResult train(const ModelSpec& spec, const Dataset& data,
                  const SplitPlan& split, const TrainOptions& options);

/// Predicted class per listed example.
std::vector<std::size_t> predict_all(const TrainedModel& model, const Dataset& data,
                                     std::span<const std::size_t> indices,
                                     std::size_t threads = 0);

std::size_t env_thread_count(); // CALTYPE_THREADS, 0 when unset

} // namespace caltype
