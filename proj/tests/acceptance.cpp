// End-to-end acceptance checks, one criterion per invocation:
//   acceptance <criterion 1..11> <cli-binary> <dataset-file>
// Each criterion prints its sub-checks and a final PASS/FAIL line; the
// exit code is 0 only when every sub-check holds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "caltype/io.hpp"
#include "caltype/metrics.hpp"
#include "caltype/model.hpp"
#include "caltype/recurrent.hpp"
#include "caltype/rng.hpp"
#include "caltype/sim.hpp"
#include "caltype/training.hpp"

using namespace caltype;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("  [%s] %s\n", ok ? " ok " : "FAIL", what.c_str());
  if (!ok) ++failures;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

int run_cli(const std::string& cmd) {
  std::printf("  $ %s\n", cmd.c_str());
  std::fflush(stdout);
  int rc = std::system(cmd.c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

TrainResult train_preset(const std::string& preset, const Dataset& data,
                         const SplitPlan& plan, std::size_t epochs,
                         std::uint64_t seed) {
  TrainOptions opt;
  opt.epochs = epochs;
  opt.seed = seed;
  return train(ModelSpec::preset(preset), data, plan, opt);
}

double dataset_accuracy(const TrainedModel& model, const Dataset& data) {
  std::size_t correct = 0;
  for (const auto& ex : data)
    if (model.predict(ex.signal) == static_cast<std::size_t>(ex.label)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// ------------------------------------------------------------- criterion 1
// Gradient correctness through the CLI, all families, under 60 s total.
void criterion1(const std::string& cli, const std::string&) {
  auto t0 = Clock::now();
  for (const char* family : {"cnn", "rnn", "lstm"}) {
    int rc = run_cli(cli + " gradcheck --family " + family);
    check(rc == 0, std::string("gradcheck ") + family + " exits 0");
  }
  double secs = elapsed_s(t0);
  check(secs < 60.0, "total gradcheck runtime " + num(secs) + " s < 60 s");
}

// ------------------------------------------------------------- criterion 2
// Scalar hand oracles for the softmax, RNN and LSTM cell equations, and
// the T=1 RNN == dense-of-dense identity, all within 1e-12.
void criterion2(const std::string&, const std::string&) {
  const double tol = 1e-12;

  std::vector<double> two = {0.0, std::log(3.0)};
  auto p = softmax(two);
  check(std::fabs(p[0] - 0.25) < tol && std::fabs(p[1] - 0.75) < tol,
        "softmax({0, ln 3}) = {1/4, 3/4}");
  std::vector<double> flat(4, 1.7);
  auto u = softmax(flat);
  bool uniform = true;
  for (double v : u) uniform = uniform && std::fabs(v - 0.25) < tol;
  check(uniform, "softmax of equal inputs is uniform");

  RnnLayer rnn(2, 2);
  rnn.w_in().value = Matrix::from_rows({{0.1, -0.2}, {0.3, 0.4}});
  rnn.w_rec().value = Matrix::from_rows({{0.5, 0.0}, {-0.1, 0.2}});
  rnn.bias().value = Matrix::column(std::vector<double>{0.05, -0.05});
  auto h = rnn.step(std::vector<double>{1.0, 2.0}, std::vector<double>{0.3, -0.4});
  double pre0 = 0.1 - 0.4 + 0.15 + 0.0 + 0.05;
  double pre1 = 0.3 + 0.8 - 0.03 - 0.08 - 0.05;
  check(std::fabs(h[0] - std::tanh(pre0)) < tol &&
            std::fabs(h[1] - std::tanh(pre1)) < tol,
        "RNN cell matches the scalar hand evaluation");

  LstmLayer lstm(1, 1);
  auto set = [&](LstmLayer::Gate g, double wx, double wh, double b) {
    lstm.w_in(g).value(0, 0) = wx;
    lstm.w_rec(g).value(0, 0) = wh;
    lstm.bias(g).value(0, 0) = b;
  };
  set(LstmLayer::kForget, 0.5, -0.3, 0.1);
  set(LstmLayer::kInput, -0.2, 0.4, 0.0);
  set(LstmLayer::kCandidate, 0.7, 0.2, -0.1);
  set(LstmLayer::kOutput, 0.3, 0.6, 0.2);
  double x = 0.8, hp = -0.5, cp = 0.4;
  auto [hs, cs] = lstm.step(std::vector<double>{x}, std::vector<double>{hp},
                            std::vector<double>{cp});
  auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  double F = sigmoid(0.5 * x - 0.3 * hp + 0.1);
  double I = sigmoid(-0.2 * x + 0.4 * hp + 0.0);
  double cand = std::tanh(0.7 * x + 0.2 * hp - 0.1);
  double O = sigmoid(0.3 * x + 0.6 * hp + 0.2);
  double c_t = F * cp + I * cand;
  check(std::fabs(cs[0] - c_t) < tol &&
            std::fabs(hs[0] - O * std::tanh(c_t)) < tol,
        "LSTM cell matches the scalar hand evaluation");

  // T=1: one recurrent step is tanh(W1 x + b) into the dense softmax head.
  ModelSpec spec;
  spec.family = Family::kRnn;
  spec.timesteps = 1;
  LayerSpec cell;
  cell.kind = LayerSpec::Kind::kRecurrent;
  cell.hidden = 5;
  spec.layers = {cell};
  Network net(spec, 8, 21);
  Rng rng(22);
  std::vector<double> in(8);
  for (double& v : in) v = rng.normal();
  auto probs = net.forward(in);

  auto params = net.params(); // [W1, W2, b_h, W_out, b_out]
  std::vector<double> hidden(5);
  for (std::size_t i = 0; i < 5; ++i) {
    double pre = params[2]->value(i, 0);
    for (std::size_t j = 0; j < 8; ++j) pre += params[0]->value(i, j) * in[j];
    hidden[i] = std::tanh(pre);
  }
  std::vector<double> logits(4);
  for (std::size_t i = 0; i < 4; ++i) {
    logits[i] = params[4]->value(i, 0);
    for (std::size_t j = 0; j < 5; ++j) logits[i] += params[3]->value(i, j) * hidden[j];
  }
  auto expect = softmax(logits);
  double worst = 0;
  for (std::size_t i = 0; i < 4; ++i)
    worst = std::max(worst, std::fabs(probs[i] - expect[i]));
  check(worst < tol, "T=1 RNN equals dense-tanh-dense (max diff " +
                         std::to_string(worst) + ")");
}

// ------------------------------------------------------------- criterion 3
void criterion3(const std::string&, const std::string&) {
  bool all = true;
  for (std::size_t n : {10u, 11u, 100u, 157u, 4000u})
    for (std::size_t k : {1u, 2u, 3u, 10u})
      for (std::size_t s : {1u, 2u, 3u}) {
        if (n < k) continue;
        Conv1D conv(1, k, s, 1);
        if (conv.output_length(n) != (n - k) / s + 1) all = false;
      }
  check(all, "M = floor((N - K) / s) + 1 across the sweep");
  Conv1D ref(32, 10, 1, 1);
  check(ref.output_length(4000) == 3991, "N=4000, K=10, s=1 gives M=3991");
}

// ------------------------------------------------------------- criterion 4
// Full 20-epoch cnn-best training on one canonical split.
void criterion4(const std::string&, const std::string& data_path) {
  Dataset data = read_dataset(data_path);
  auto plans = make_splits(data.size(), 1, 3157, 790, 11);
  auto t0 = Clock::now();
  auto result = train_preset("cnn-best", data, plans[0], 20, 11);
  double secs = elapsed_s(t0);

  MeanVarBaseline baseline;
  baseline.fit(data, plans[0].train_indices, kNumCellTypes);
  std::size_t correct = 0;
  for (std::size_t i : plans[0].test_indices)
    if (baseline.predict(data[i].signal) == static_cast<std::size_t>(data[i].label))
      ++correct;
  double base_acc = static_cast<double>(correct) / plans[0].test_indices.size();

  double acc = result.report.test_accuracy;
  check(acc >= 0.70, "cnn-best test accuracy " + num(acc) + " >= 0.70");
  check(acc - base_acc >= 0.15, "margin over mean/variance baseline " +
                                    num(acc - base_acc) + " >= 0.15 (baseline " +
                                    num(base_acc) + ")");
  check(secs < 900.0, "training wall-clock " + num(secs) + " s < 900 s");
}

// ------------------------------------------------------------- criterion 5
// Family ordering over the 10-split protocol. Epochs are reduced to 2 to
// keep the sweep tractable on one core; the ordering is the claim under
// test, and all three families run the identical protocol.
void criterion5(const std::string&, const std::string& data_path) {
  Dataset data = read_dataset(data_path);
  auto plans = make_splits(data.size(), 10, 3157, 790, 17);
  std::map<std::string, double> mean_acc;
  for (const char* preset : {"cnn-best", "rnn-t2", "adaboost-100"}) {
    std::vector<double> accs;
    for (std::size_t s = 0; s < plans.size(); ++s) {
      auto result = train_preset(preset, data, plans[s],
                                 2, derive_seed(17, 0xac, s));
      accs.push_back(result.report.test_accuracy);
      std::printf("  %s split %zu: %.4f\n", preset, s,
                  result.report.test_accuracy);
      std::fflush(stdout);
    }
    mean_acc[preset] = mean_std(accs).mean;
  }
  std::printf("  means: cnn-best %.4f, rnn-t2 %.4f, adaboost-100 %.4f\n",
              mean_acc["cnn-best"], mean_acc["rnn-t2"], mean_acc["adaboost-100"]);
  check(mean_acc["cnn-best"] >= mean_acc["rnn-t2"],
        "mean accuracy cnn-best >= rnn-t2");
  check(mean_acc["rnn-t2"] >= mean_acc["adaboost-100"],
        "mean accuracy rnn-t2 >= adaboost-100");
}

// ------------------------------------------------------------- criterion 6
// Per-epoch wall-clock strictly decreasing from T=10 to T=5 to T=2,
// compared on the median across epochs to damp scheduler noise.
void criterion6(const std::string&, const std::string& data_path) {
  Dataset data = read_dataset(data_path);
  auto plans = make_splits(data.size(), 1, 3157, 790, 23);
  std::vector<double> med;
  for (const char* preset : {"rnn-t10", "rnn-t5", "rnn-t2"}) {
    auto result = train_preset(preset, data, plans[0], 5, 23);
    med.push_back(median(result.report.epoch_seconds));
    std::printf("  %s median epoch %.3f s\n", preset, med.back());
    std::fflush(stdout);
  }
  check(med[0] > med[1], "epoch time T=10 (" + num(med[0]) + " s) > T=5 (" +
                             num(med[1]) + " s)");
  check(med[1] > med[2], "epoch time T=5 (" + num(med[1]) + " s) > T=2 (" +
                             num(med[2]) + " s)");
}

// ------------------------------------------------------------- criterion 7
// Timestep-count accuracy trend through the benchmark grid.
void criterion7(const std::string& cli, const std::string& data_path) {
  std::string csv_path = data_path + ".bench.csv";
  int rc = run_cli(cli + " benchmark --data '" + data_path +
                   "' --grid timesteps --preset cnn-best --epochs 2 --splits 2" +
                   " --train-size 800 --test-size 400 --seed 3 --report '" +
                   csv_path + "'");
  check(rc == 0, "benchmark timesteps grid exits 0");
  if (rc != 0) return;

  std::map<std::size_t, double> acc;
  std::istringstream in(read_text_file(csv_path));
  std::string line;
  std::getline(in, line); // header
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string grid, value, status, a;
    std::getline(row, grid, ',');
    std::getline(row, value, ',');
    std::getline(row, status, ',');
    std::getline(row, a, ',');
    if (status == "ok") acc[std::stoul(value)] = std::stod(a);
  }
  check(acc.count(1000) && acc.count(2000) && acc.count(4000),
        "grid reports all of {1000, 2000, 4000}");
  if (acc.size() == 3) {
    std::printf("  accuracies: 1000 -> %.4f, 2000 -> %.4f, 4000 -> %.4f\n",
                acc[1000], acc[2000], acc[4000]);
    check(acc[2000] >= acc[1000] - 0.02,
          "accuracy(2000) >= accuracy(1000) - 0.02");
    check(acc[4000] >= acc[2000] - 0.02,
          "accuracy(4000) >= accuracy(2000) - 0.02");
  }
}

// ------------------------------------------------------------- criterion 8
void criterion8(const std::string&, const std::string&) {
  Rng rng(29);
  bool metrics_ok = true, rows_ok = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 1 + rng.below(400);
    std::vector<std::size_t> preds(n), labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      preds[i] = rng.below(4);
      labels[i] = rng.below(4);
    }
    auto cm = confusion(preds, labels, 4);
    auto m = class_metrics(cm);

    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (preds[i] == labels[i]) ++agree;
    if (cm.accuracy() != static_cast<double>(agree) / n) metrics_ok = false;

    for (std::size_t c = 0; c < 4 && metrics_ok; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        bool is = labels[i] == c, said = preds[i] == c;
        tp += is && said;
        fp += !is && said;
        fn += is && !said;
        tn += !is && !said;
      }
      auto matches = [](const std::optional<double>& got, std::size_t numer,
                        std::size_t denom) {
        if (denom == 0) return !got.has_value();
        return got.has_value() &&
               std::fabs(*got - static_cast<double>(numer) / denom) < 1e-12;
      };
      if (!matches(m.precision[c], tp, tp + fp)) metrics_ok = false;
      if (!matches(m.recall[c], tp, tp + fn)) metrics_ok = false;
      if (!matches(m.specificity[c], tn, tn + fp)) metrics_ok = false;
    }

    Matrix norm = cm.normalized();
    for (std::size_t r = 0; r < 4; ++r) {
      double sum = 0;
      for (std::size_t c = 0; c < 4; ++c) sum += norm(r, c);
      double want = cm.row_sum(r) == 0 ? 0.0 : 1.0;
      if (std::fabs(sum - want) > 1e-12) rows_ok = false;
    }
  }
  check(metrics_ok, "confusion/precision/recall/specificity match the "
                    "brute-force counter on 1000 random sets");
  check(rows_ok, "normalized confusion rows sum to 1 within 1e-12");
}

// ------------------------------------------------------------- criterion 9
// Byte determinism of repeated cmd_train runs. The report's wall-clock
// timing fields are measurements and are masked before comparison; all
// other report content and the model file must match byte for byte.
void criterion9(const std::string& cli, const std::string& data_path) {
  auto train_once = [&](const std::string& tag) {
    return run_cli(cli + " train --data '" + data_path +
                   "' --preset rnn-t2 --epochs 1 --splits 2" +
                   " --train-size 300 --test-size 100 --seed 5 --threads 0" +
                   " --out '" + data_path + ".m" + tag + "' --report '" +
                   data_path + ".r" + tag + "' > /dev/null");
  };
  check(train_once("1") == 0, "first training run exits 0");
  check(train_once("2") == 0, "second training run exits 0");

  std::string m1 = read_text_file(data_path + ".m1");
  std::string m2 = read_text_file(data_path + ".m2");
  check(!m1.empty() && m1 == m2, "model files are byte-identical");

  auto mask_timing = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    std::vector<std::size_t> masked;
    bool first = true;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::istringstream row(line);
      std::string cell;
      while (std::getline(row, cell, ',')) cells.push_back(cell);
      if (first) {
        for (std::size_t i = 0; i < cells.size(); ++i)
          if (cells[i].find("seconds") != std::string::npos) masked.push_back(i);
        first = false;
      }
      for (std::size_t i : masked)
        if (i < cells.size()) cells[i] = "<t>";
      for (std::size_t i = 0; i < cells.size(); ++i)
        out += (i ? "," : "") + cells[i];
      out += "\n";
    }
    return out;
  };
  std::string r1 = read_text_file(data_path + ".r1");
  std::string r2 = read_text_file(data_path + ".r2");
  check(!r1.empty() && mask_timing(r1) == mask_timing(r2),
        "report files are byte-identical outside the wall-clock columns");
}

// ------------------------------------------------------------ criterion 10
void criterion10(const std::string&, const std::string&) {
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 10 && ok; ++seed) {
    auto plans = make_splits(3947, 10, 3157, 790, seed);
    if (plans.size() != 10) ok = false;
    for (const auto& plan : plans) {
      std::set<std::size_t> train(plan.train_indices.begin(),
                                  plan.train_indices.end());
      std::set<std::size_t> all = train;
      all.insert(plan.test_indices.begin(), plan.test_indices.end());
      if (train.size() != 3157 || plan.test_indices.size() != 790 ||
          all.size() != 3947 || *all.rbegin() != 3946)
        ok = false;
    }
  }
  check(ok, "all 3157/790 splits are disjoint and exhaustive over 3947 "
            "examples, for 10 seeds x 10 splits");
}

// ------------------------------------------------------------ criterion 11
// Generalization to a severity-0.2 shifted generator profile.
void criterion11(const std::string&, const std::string& data_path) {
  Dataset data = read_dataset(data_path);
  auto plans = make_splits(data.size(), 1, 1000, 500, 31);
  auto result = train_preset("cnn-best", data, plans[0], 3, 31);
  std::printf("  in-distribution test accuracy %.4f\n",
              result.report.test_accuracy);

  Profile shifted = shift_profile(default_profile(), 0.2, 7);
  Dataset shifted_data =
      generate_dataset(shifted, {250, 237, 250, 250}, 4000, 99);
  double acc = dataset_accuracy(result.model, shifted_data);
  check(acc > 0.50, "accuracy on severity-0.2 shifted data " + num(acc) +
                        " > 0.50 (2x chance)");
}

} // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: %s <criterion 1..11> <cli> <dataset>\n", argv[0]);
    return 2;
  }
  ::unsetenv("CALTYPE_THREADS");
  int id = std::atoi(argv[1]);
  std::string cli = argv[2], data = argv[3];
  std::printf("criterion %d\n", id);
  switch (id) {
    case 1: criterion1(cli, data); break;
    case 2: criterion2(cli, data); break;
    case 3: criterion3(cli, data); break;
    case 4: criterion4(cli, data); break;
    case 5: criterion5(cli, data); break;
    case 6: criterion6(cli, data); break;
    case 7: criterion7(cli, data); break;
    case 8: criterion8(cli, data); break;
    case 9: criterion9(cli, data); break;
    case 10: criterion10(cli, data); break;
    case 11: criterion11(cli, data); break;
    default:
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
  }
  std::printf("%s criterion %d\n", failures == 0 ? "PASS" : "FAIL", id);
  return failures == 0 ? 0 : 1;
}
