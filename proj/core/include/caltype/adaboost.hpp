#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "caltype/dataset.hpp"

namespace caltype {

/// One boosting round: a depth-1 threshold stump with two leaves. The side
/// selected by polarity votes cls; the complementary side votes out_cls,
/// so every example receives a prediction.
struct Stump {
  std::size_t feature = 0;
  double threshold = 0.0;
  int polarity = +1; // +1: region is x[feature] <= threshold; -1: x[feature] > threshold
  std::size_t cls = 0;     // class voted inside the region
  std::size_t out_cls = 0; // class voted on the complementary side
  double alpha = 0.0;

  bool in_region(std::span<const double> x) const {
    return polarity > 0 ? x[feature] <= threshold : x[feature] > threshold;
  }
};

struct StumpEnsemble {
  std::size_t classes = kNumCellTypes;
  std::vector<Stump> rounds;

  /// Alpha-weighted vote; a stump adds alpha to cls inside its region and
  /// to out_cls outside it. Ties break to the lowest index.
  std::size_t predict(std::span<const double> x) const;
};

/// Multi-class boosting (SAMME round weights, alpha = ln((1-err)/err) +
/// ln(C-1)) over two-leaf threshold stumps on raw timepoints. Candidate
/// thresholds are 64 evenly spaced quantiles over sqrt(len) subsampled
/// features per round. Rounds with err >= 1 - 1/C terminate boosting.
/// on_round, when set, observes the sample-weight distribution after each
/// retained round's renormalization (testing hook).
StumpEnsemble adaboost_train(
    const Dataset& data, std::span<const std::size_t> indices,
    std::size_t n_rounds, std::size_t classes, std::uint64_t seed,
    const std::function<void(std::span<const double>)>& on_round = {});

} // namespace caltype
