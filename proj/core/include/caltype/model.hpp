#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "caltype/dataset.hpp"
#include "caltype/recurrent.hpp"

namespace caltype {

enum class Family { kCnn, kRnn, kLstm, kAdaBoost };

std::string family_name(Family f);
Family parse_family(const std::string& name);

/// One entry of a declarative layer list.
struct LayerSpec {
  enum class Kind { kConv, kMaxPool, kDropout, kRecurrent };
  Kind kind = Kind::kConv;
  std::size_t filters = 0;   // conv
  std::size_t kernel = 0;    // conv
  std::size_t stride = 1;    // conv / pool
  std::size_t pool = 0;      // pool
  double keep_prob = 0.5;    // dropout
  std::size_t hidden = 0;    // recurrent
};

/// Declarative description of a network (or the boosting baseline).
struct ModelSpec {
  Family family = Family::kCnn;
  std::vector<LayerSpec> layers;
  std::size_t timesteps = 1; // recurrent families
  std::size_t classes = kNumCellTypes;
  std::size_t rounds = 100;  // adaboost

  /// Throws ValidationError when the spec cannot form a shape-consistent
  /// network for traces of the given length.
  void validate(std::size_t input_length) const;

  std::string to_text() const;
  static ModelSpec from_text(const std::string& text);

  static ModelSpec preset(const std::string& name);
  static std::vector<std::string> preset_names();
};

/// A runnable network: z-scored trace in, class probabilities out.
class Network {
public:
  Network(const ModelSpec& spec, std::size_t input_length, std::uint64_t init_seed);

  std::vector<double> forward(std::span<const double> trace);
  /// Backpropagates from the softmax/cross-entropy head; accumulates
  /// parameter gradients. Must follow a forward() call.
  void backward(std::span<const double> probs, std::size_t target);

  std::vector<Tensor*> params();
  void zero_grads();
  /// Materializes gradients layers deferred across backward() calls; must
  /// run before gradients are read, scaled, clipped or applied.
  void flush_grads();
  void scale_grads(double s);
  void copy_params_from(const Network& other);

  void set_training(bool training);
  /// Deterministic per-example dropout streams.
  void reseed_dropout(std::uint64_t seed);

  std::size_t input_length() const { return input_length_; }
  std::size_t classes() const { return spec_.classes; }
  const ModelSpec& spec() const { return spec_; }
  bool is_recurrent() const { return spec_.family != Family::kCnn; }
  /// Total recurrent cell evaluations across layers (instrumentation).
  std::size_t cell_steps() const;

  std::unique_ptr<Network> clone() const;

private:
  Network(const Network& other);

  ModelSpec spec_;
  std::size_t input_length_;
  std::vector<std::unique_ptr<Layer>> layers_;
  bool forward_done_ = false;
};

/// A fitted model: spec, learned tensors and the normalization statistics
/// baked in at fit time. For the boosting family the network is absent and
/// stump data is carried instead (see adaboost.hpp).
struct StumpEnsemble;

struct TrainedModel {
  ModelSpec spec;
  std::size_t input_length = 0;
  NormStats norm;
  std::unique_ptr<Network> net;            // null for adaboost
  std::shared_ptr<StumpEnsemble> ensemble; // null otherwise

  std::vector<double> predict_proba(std::span<const double> trace) const;
  std::size_t predict(std::span<const double> trace) const;
  std::uint64_t fingerprint() const;
};

} // namespace caltype
