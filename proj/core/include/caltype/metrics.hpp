#pragma once

#include <optional>
#include <vector>

#include "caltype/dataset.hpp"
#include "caltype/matrix.hpp"

namespace caltype {

/// Rows = true class, columns = predicted class.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::uint64_t> counts; // classes x classes, row-major

  std::uint64_t& at(std::size_t truth, std::size_t pred) {
    return counts[truth * classes + pred];
  }
  std::uint64_t at(std::size_t truth, std::size_t pred) const {
    return counts[truth * classes + pred];
  }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t truth) const;
  double accuracy() const; // trace / total
  /// Row-stochastic matrix; rows with an empty row sum stay zero (their
  /// metrics are reported absent, not zero).
  Matrix normalized() const;
};

ConfusionMatrix confusion(std::span<const std::size_t> preds,
                          std::span<const std::size_t> labels, std::size_t classes);

/// One-vs-rest metrics; 0/0 ratios are absent, never silently zero.
struct ClassMetrics {
  std::vector<std::optional<double>> precision;
  std::vector<std::optional<double>> recall;
  std::vector<std::optional<double>> specificity;
};

ClassMetrics class_metrics(const ConfusionMatrix& cm);

/// Per-split evaluation summary.
struct EvalReport {
  double accuracy = 0.0;
  double train_seconds = 0.0;
  ConfusionMatrix cm;
  ClassMetrics metrics;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0; // sample standard deviation (n-1), 0 when n == 1
};

struct AggregateReport {
  MeanStd accuracy;
  MeanStd train_seconds;
  std::vector<std::optional<MeanStd>> precision;   // per class
  std::vector<std::optional<MeanStd>> recall;      // per class
  std::vector<std::optional<MeanStd>> specificity; // per class
};

MeanStd mean_std(std::span<const double> values);
AggregateReport aggregate(const std::vector<EvalReport>& reports);

/// Nearest-centroid classifier on (trace mean, trace variance), features
/// standardized over the training set. The sanity floor the deep models
/// must clear.
class MeanVarBaseline {
public:
  void fit(const Dataset& data, std::span<const std::size_t> train_indices,
           std::size_t classes);
  std::size_t predict(std::span<const double> trace) const;

private:
  std::size_t classes_ = 0;
  double f_mean_[2] = {0.0, 0.0}, f_std_[2] = {1.0, 1.0};
  std::vector<double> centroids_; // classes x 2
};

} // namespace caltype
