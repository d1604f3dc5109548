#include "caltype/adaboost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "caltype/rng.hpp"

namespace caltype {

std::size_t StumpEnsemble::predict(std::span<const double> x) const {
  std::vector<double> score(classes, 0.0);
  for (const Stump& s : rounds)
    score[s.in_region(x) ? s.cls : s.out_cls] += s.alpha;
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c)
    if (score[c] > score[best]) best = c;
  return best;
}

namespace {

constexpr std::size_t kThresholdCount = 64;

struct Candidate {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t cls = 0;     // majority class of {x <= threshold}
  std::size_t out_cls = 0; // majority class of {x > threshold}
  double error = 1.0;
  bool valid = false;

  // Fixed tie order: lowest error, then feature, then threshold.
  bool better_than(const Candidate& other) const {
    if (!other.valid) return true;
    if (error != other.error) return error < other.error;
    if (feature != other.feature) return feature < other.feature;
    return threshold < other.threshold;
  }
};

} // namespace

StumpEnsemble adaboost_train(
    const Dataset& data, std::span<const std::size_t> indices,
    std::size_t n_rounds, std::size_t classes, std::uint64_t seed,
    const std::function<void(std::span<const double>)>& on_round) {
  if (n_rounds < 1) throw ValidationError("adaboost: needs at least 1 round");
  if (indices.empty()) throw ValidationError("adaboost: empty training set");
  const std::size_t n = indices.size();
  const std::size_t len = data[indices[0]].signal.size();
  for (std::size_t i : indices)
    if (data[i].signal.size() != len)
      throw ValidationError("adaboost: ragged trace lengths");

  std::vector<std::size_t> labels(n);
  bool multiple_classes = false;
  for (std::size_t k = 0; k < n; ++k) {
    labels[k] = static_cast<std::size_t>(data[indices[k]].label);
    if (labels[k] >= classes)
      throw ValidationError("adaboost: label out of range");
    if (labels[k] != labels[0]) multiple_classes = true;
  }
  if (!multiple_classes)
    throw ValidationError("adaboost: degenerate single-class training set");

  StumpEnsemble ensemble;
  ensemble.classes = classes;
  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  const std::size_t feats_per_round =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(len))));
  Rng rng(derive_seed(seed, 0xab));

  // Reused per-feature buffers.
  std::vector<std::size_t> sorted(n);
  std::vector<double> values(n);
  std::vector<double> class_weight(classes);

  for (std::size_t round = 0; round < n_rounds; ++round) {
    // Distinct random features, evaluated in ascending order.
    std::vector<std::size_t> feats;
    {
      std::vector<std::size_t> pool;
      for (std::size_t k = 0; k < feats_per_round; ++k)
        pool.push_back(static_cast<std::size_t>(rng.below(len)));
      std::sort(pool.begin(), pool.end());
      pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
      feats = std::move(pool);
    }

    std::fill(class_weight.begin(), class_weight.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k) class_weight[labels[k]] += weights[k];

    Candidate best;
    for (std::size_t f : feats) {
      for (std::size_t k = 0; k < n; ++k) values[k] = data[indices[k]].signal[f];
      std::iota(sorted.begin(), sorted.end(), std::size_t{0});
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b];
      });

      // Sweep 64 evenly spaced quantile thresholds with running per-class
      // prefix weights of {x <= threshold}.
      std::vector<double> prefix(classes, 0.0);
      double prefix_total = 0.0;
      std::size_t pos = 0;
      for (std::size_t q = 0; q < kThresholdCount; ++q) {
        std::size_t rank = ((q + 1) * n) / (kThresholdCount + 1);
        rank = std::min(rank, n - 1);
        // Midpoint between consecutive sorted values, so no sample sits
        // exactly on a cut.
        double threshold = rank + 1 < n
                               ? 0.5 * (values[sorted[rank]] + values[sorted[rank + 1]])
                               : values[sorted[rank]];
        while (pos < n && values[sorted[pos]] <= threshold) {
          prefix[labels[sorted[pos]]] += weights[sorted[pos]];
          prefix_total += weights[sorted[pos]];
          ++pos;
        }
        // Each leaf predicts its weighted-majority class; the stump error
        // is the total weight the two leaves get wrong.
        std::size_t left = 0, right = 0;
        for (std::size_t c = 1; c < classes; ++c) {
          if (prefix[c] > prefix[left]) left = c;
          if (class_weight[c] - prefix[c] > class_weight[right] - prefix[right])
            right = c;
        }
        Candidate cand{f, threshold, left, right,
                       1.0 - prefix[left] - (class_weight[right] - prefix[right]),
                       true};
        if (cand.better_than(best)) best = cand;
      }
    }

    // The lower clamp bounds alpha: a vanishing weighted error would give
    // one stump an effectively infinite vote and collapse the weight
    // distribution in a single round.
    double err = std::clamp(best.error, 1e-3, 1.0 - 1e-12);
    double limit = 1.0 - 1.0 / static_cast<double>(classes);
    if (!best.valid || best.error >= limit) break; // weak-learner condition failed

    Stump stump;
    stump.feature = best.feature;
    stump.threshold = best.threshold;
    stump.polarity = +1;
    stump.cls = best.cls;
    stump.out_cls = best.out_cls;
    stump.alpha = std::log((1.0 - err) / err) +
                  std::log(static_cast<double>(classes) - 1.0);
    ensemble.rounds.push_back(stump);

    // SAMME reweight: misclassified samples go up by e^alpha, then the
    // distribution is renormalized.
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& x = data[indices[k]].signal;
      std::size_t predicted = stump.in_region(x) ? stump.cls : stump.out_cls;
      if (predicted != labels[k]) weights[k] *= std::exp(stump.alpha);
      sum += weights[k];
    }
    for (double& w : weights) w /= sum;
    if (on_round) on_round(weights);
  }
  return ensemble;
}

} // namespace caltype
