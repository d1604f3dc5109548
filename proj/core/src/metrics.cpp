#include "caltype/metrics.hpp"

#include <cmath>

namespace caltype {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto v : counts) s += v;
  return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < classes; ++c) s += at(truth, c);
  return s;
}

double ConfusionMatrix::accuracy() const {
  std::uint64_t t = total();
  if (t == 0) return 0.0;
  std::uint64_t diag = 0;
  for (std::size_t c = 0; c < classes; ++c) diag += at(c, c);
  return static_cast<double>(diag) / static_cast<double>(t);
}

Matrix ConfusionMatrix::normalized() const {
  Matrix m(classes, classes);
  for (std::size_t r = 0; r < classes; ++r) {
    std::uint64_t s = row_sum(r);
    if (s == 0) continue;
    for (std::size_t c = 0; c < classes; ++c)
      m(r, c) = static_cast<double>(at(r, c)) / static_cast<double>(s);
  }
  return m;
}

ConfusionMatrix confusion(std::span<const std::size_t> preds,
                          std::span<const std::size_t> labels, std::size_t classes) {
  if (preds.size() != labels.size())
    throw ValidationError("confusion: " + std::to_string(preds.size()) +
                          " predictions vs " + std::to_string(labels.size()) +
                          " labels");
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.counts.assign(classes * classes, 0);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (preds[k] >= classes || labels[k] >= classes)
      throw ValidationError("confusion: class index out of range");
    ++cm.at(labels[k], preds[k]);
  }
  return cm;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  ClassMetrics out;
  const std::uint64_t total = cm.total();
  for (std::size_t c = 0; c < cm.classes; ++c) {
    std::uint64_t tp = cm.at(c, c);
    std::uint64_t fn = cm.row_sum(c) - tp;
    std::uint64_t fp = 0;
    for (std::size_t r = 0; r < cm.classes; ++r)
      if (r != c) fp += cm.at(r, c);
    std::uint64_t tn = total - tp - fn - fp;
    auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
      if (den == 0) return std::nullopt;
      return static_cast<double>(num) / static_cast<double>(den);
    };
    out.precision.push_back(ratio(tp, tp + fp));
    out.recall.push_back(ratio(tp, tp + fn));
    out.specificity.push_back(ratio(tn, tn + fp));
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw ValidationError("mean_std: empty input");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

AggregateReport aggregate(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw ValidationError("aggregate: no reports");
  const std::size_t classes = reports.front().cm.classes;
  for (const auto& r : reports)
    if (r.cm.classes != classes)
      throw ValidationError("aggregate: heterogeneous reports");

  AggregateReport agg;
  std::vector<double> acc, secs;
  for (const auto& r : reports) {
    acc.push_back(r.accuracy);
    secs.push_back(r.train_seconds);
  }
  agg.accuracy = mean_std(acc);
  agg.train_seconds = mean_std(secs);

  auto collect = [&](auto getter) {
    std::vector<std::optional<MeanStd>> out;
    for (std::size_t c = 0; c < classes; ++c) {
      std::vector<double> vals;
      for (const auto& r : reports)
        if (auto v = getter(r.metrics, c)) vals.push_back(*v);
      if (vals.empty()) out.push_back(std::nullopt);
      else out.push_back(mean_std(vals));
    }
    return out;
  };
  agg.precision = collect([](const ClassMetrics& m, std::size_t c) { return m.precision[c]; });
  agg.recall = collect([](const ClassMetrics& m, std::size_t c) { return m.recall[c]; });
  agg.specificity =
      collect([](const ClassMetrics& m, std::size_t c) { return m.specificity[c]; });
  return agg;
}

void MeanVarBaseline::fit(const Dataset& data,
                          std::span<const std::size_t> train_indices,
                          std::size_t classes) {
  if (train_indices.empty()) throw ValidationError("baseline: empty training set");
  classes_ = classes;
  std::vector<double> feats(train_indices.size() * 2);
  auto features = [](std::span<const double> x, double out[2]) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    out[0] = mean;
    out[1] = var;
  };
  for (std::size_t k = 0; k < train_indices.size(); ++k)
    features(data[train_indices[k]].signal, &feats[2 * k]);

  for (int f = 0; f < 2; ++f) {
    double m = 0.0;
    for (std::size_t k = 0; k < train_indices.size(); ++k) m += feats[2 * k + f];
    m /= static_cast<double>(train_indices.size());
    double ss = 0.0;
    for (std::size_t k = 0; k < train_indices.size(); ++k)
      ss += (feats[2 * k + f] - m) * (feats[2 * k + f] - m);
    f_mean_[f] = m;
    f_std_[f] = std::max(std::sqrt(ss / static_cast<double>(train_indices.size())), 1e-12);
  }

  centroids_.assign(classes * 2, 0.0);
  std::vector<std::size_t> per_class(classes, 0);
  for (std::size_t k = 0; k < train_indices.size(); ++k) {
    std::size_t cls = static_cast<std::size_t>(data[train_indices[k]].label);
    for (int f = 0; f < 2; ++f)
      centroids_[cls * 2 + f] += (feats[2 * k + f] - f_mean_[f]) / f_std_[f];
    ++per_class[cls];
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (per_class[c] > 0)
      for (int f = 0; f < 2; ++f)
        centroids_[c * 2 + f] /= static_cast<double>(per_class[c]);
}

std::size_t MeanVarBaseline::predict(std::span<const double> trace) const {
  double mean = 0.0;
  for (double v : trace) mean += v;
  mean /= static_cast<double>(trace.size());
  double var = 0.0;
  for (double v : trace) var += (v - mean) * (v - mean);
  var /= static_cast<double>(trace.size());
  double f0 = (mean - f_mean_[0]) / f_std_[0];
  double f1 = (var - f_mean_[1]) / f_std_[1];
  std::size_t best = 0;
  double best_d = 0.0;
  for (std::size_t c = 0; c < classes_; ++c) {
    double d0 = f0 - centroids_[c * 2];
    double d1 = f1 - centroids_[c * 2 + 1];
    double d = d0 * d0 + d1 * d1;
    if (c == 0 || d < best_d) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

} // namespace caltype
