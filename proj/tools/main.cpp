// Command-line front end: dataset generation, training, evaluation,
// gradient checking and ablation sweeps over one shared model core.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "caltype/adaboost.hpp"
#include "caltype/gradcheck.hpp"
#include "caltype/io.hpp"
#include "caltype/metrics.hpp"
#include "caltype/rng.hpp"
#include "caltype/training.hpp"

namespace {

using namespace caltype;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;
constexpr int kExitGradcheck = 4;
constexpr double kGradTolerance = 1e-4;

std::array<std::size_t, kNumCellTypes> parse_counts(const std::string& text) {
  std::array<std::size_t, kNumCellTypes> counts{};
  std::size_t pos = 0;
  for (std::size_t c = 0; c < kNumCellTypes; ++c) {
    std::size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos
                                            ? std::string::npos
                                            : comma - pos);
    try {
      counts[c] = std::stoull(item);
    } catch (const std::exception&) {
      throw ValidationError("--counts: '" + item + "' is not a count");
    }
    if (comma == std::string::npos) {
      if (c + 1 != kNumCellTypes)
        throw ValidationError("--counts needs " + std::to_string(kNumCellTypes) +
                              " comma-separated values");
      pos = text.size();
    } else {
      pos = comma + 1;
    }
  }
  if (pos != text.size())
    throw ValidationError("--counts needs exactly " +
                          std::to_string(kNumCellTypes) + " values");
  return counts;
}

EvalReport evaluate(const TrainedModel& model, const Dataset& data,
                    std::span<const std::size_t> indices, double train_seconds,
                    std::size_t threads) {
  auto preds = predict_all(model, data, indices, threads);
  std::vector<std::size_t> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices)
    labels.push_back(static_cast<std::size_t>(data[i].label));
  EvalReport report;
  report.cm = confusion(preds, labels, model.spec.classes);
  report.accuracy = report.cm.accuracy();
  report.metrics = class_metrics(report.cm);
  report.train_seconds = train_seconds;
  return report;
}

void print_confusion(const ConfusionMatrix& cm) {
  Matrix norm = cm.normalized();
  std::printf("normalized confusion (rows = true class):\n");
  std::printf("%8s", "");
  for (std::size_t c = 0; c < cm.classes; ++c)
    std::printf("%8s", kCellTypeNames[c]);
  std::printf("\n");
  for (std::size_t r = 0; r < cm.classes; ++r) {
    std::printf("%8s", kCellTypeNames[r]);
    for (std::size_t c = 0; c < cm.classes; ++c)
      std::printf("%8.3f", norm(r, c));
    std::printf("\n");
  }
}

// ------------------------------------------------------------------ generate

struct GenerateArgs {
  std::string profile_path;
  std::string counts = "1000,947,1000,1000";
  std::size_t length = 4000;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_generate(const GenerateArgs& args) {
  Profile profile =
      args.profile_path.empty() ? default_profile() : read_profile(args.profile_path);
  auto counts = parse_counts(args.counts);
  Dataset data = generate_dataset(profile, counts, args.length, args.seed);
  write_dataset(args.out, data, args.length);
  std::printf("wrote %zu traces of length %zu to %s\n", data.size(), args.length,
              args.out.c_str());
  for (std::size_t c = 0; c < kNumCellTypes; ++c)
    std::printf("  %s: %zu\n", kCellTypeNames[c], counts[c]);
  return kExitOk;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string data_path;
  std::string preset;
  std::string spec_path;
  std::size_t epochs = 20;
  std::size_t splits = 10;
  std::size_t train_size = 3157;
  std::size_t test_size = 790;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string model_out;
  std::string report_out;
};

ModelSpec resolve_spec(const std::string& preset, const std::string& spec_path) {
  if (!preset.empty() && !spec_path.empty())
    throw ValidationError("--preset and --spec are mutually exclusive");
  if (!preset.empty()) {
    try {
      return ModelSpec::preset(preset);
    } catch (const ValidationError&) {
      std::string msg = "unknown preset '" + preset + "'; available:";
      for (const auto& name : ModelSpec::preset_names()) msg += "\n  " + name;
      throw ValidationError(msg);
    }
  }
  if (!spec_path.empty()) return ModelSpec::from_text(read_text_file(spec_path));
  throw ValidationError("one of --preset or --spec is required");
}

int cmd_train(const TrainArgs& args) {
  ModelSpec spec = resolve_spec(args.preset, args.spec_path);
  Dataset data = read_dataset(args.data_path);
  if (data.empty()) throw ValidationError("dataset is empty");
  const std::size_t length = data[0].signal.size();
  spec.validate(length);

  auto plans = make_splits(data.size(), args.splits, args.train_size,
                           args.test_size, args.seed);

  std::vector<EvalReport> reports;
  std::size_t best = 0;
  TrainedModel best_model;
  for (std::size_t s = 0; s < plans.size(); ++s) {
    TrainOptions options;
    options.epochs = args.epochs;
    options.seed = derive_seed(args.seed, 0x7a, s);
    options.threads = args.threads;
    TrainResult result = train(spec, data, plans[s], options);
    reports.push_back(evaluate(result.model, data, plans[s].test_indices,
                               result.report.train_seconds, args.threads));
    std::printf("split %zu: test accuracy %.4f (%.1fs, %zu optimizer steps)\n", s,
                reports.back().accuracy, result.report.train_seconds,
                result.report.optimizer_steps);
    std::fflush(stdout);
    if (s == 0 || reports.back().accuracy > reports[best].accuracy) {
      best = s;
      best_model = std::move(result.model);
    }
  }

  auto agg = aggregate(reports);
  std::printf("aggregate: accuracy %.4f +/- %.4f over %zu splits\n",
              agg.accuracy.mean, agg.accuracy.std, reports.size());
  std::printf("best split: %zu (accuracy %.4f)\n", best, reports[best].accuracy);

  if (!args.model_out.empty()) {
    write_model(args.model_out, best_model);
    std::printf("model written to %s\n", args.model_out.c_str());
  }
  if (!args.report_out.empty()) {
    write_text_file(args.report_out, train_report_csv(reports));
    std::printf("report written to %s\n", args.report_out.c_str());
  }
  return kExitOk;
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string model_path;
  std::string data_path;
  std::string report_out;
  std::size_t threads = 0;
};

int cmd_eval(const EvalArgs& args) {
  TrainedModel model = read_model(args.model_path);
  Dataset data = read_dataset(args.data_path);
  if (data.empty()) throw ValidationError("dataset is empty");
  const std::size_t length = data[0].signal.size();
  if (length != model.input_length)
    throw ValidationError("model expects traces of length " +
                          std::to_string(model.input_length) +
                          " but the dataset holds length " + std::to_string(length));

  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  EvalReport report = evaluate(model, data, all, 0.0, args.threads);

  std::printf("accuracy: %.4f over %zu examples\n", report.accuracy, data.size());
  print_confusion(report.cm);
  for (std::size_t c = 0; c < report.cm.classes; ++c) {
    auto cell = [](const std::optional<double>& v) {
      return v ? std::to_string(*v).substr(0, 6) : std::string("absent");
    };
    std::printf("  %s: precision %s recall %s specificity %s\n", kCellTypeNames[c],
                cell(report.metrics.precision[c]).c_str(),
                cell(report.metrics.recall[c]).c_str(),
                cell(report.metrics.specificity[c]).c_str());
  }
  if (!args.report_out.empty()) {
    write_text_file(args.report_out, eval_report_csv(report));
    std::printf("report written to %s\n", args.report_out.c_str());
  }
  return kExitOk;
}

// ----------------------------------------------------------------- gradcheck

int cmd_gradcheck(const std::string& family_name_str, std::uint64_t seed) {
  Family family = parse_family(family_name_str);
  if (family == Family::kAdaBoost)
    throw ValidationError("gradcheck applies to the differentiable families");
  auto cases = gradcheck_family(family, seed);
  double worst = 0.0;
  for (const auto& c : cases) {
    std::printf("  %-32s max relative error %.3e\n", c.name.c_str(), c.max_rel_err);
    worst = std::max(worst, c.max_rel_err);
  }
  std::printf("max relative error: %.3e (tolerance %.0e)\n", worst, kGradTolerance);
  return worst < kGradTolerance ? kExitOk : kExitGradcheck;
}

// ----------------------------------------------------------------- benchmark

struct BenchmarkArgs {
  std::string data_path;
  std::string grid;
  std::string preset = "cnn-best";
  std::size_t epochs = 20;
  std::size_t splits = 3;
  std::size_t train_size = 3157;
  std::size_t test_size = 790;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string report_out;
};

struct GridCell {
  std::size_t value = 0;
  bool skipped = false;
  MeanStd accuracy;
  MeanStd seconds;
};

GridCell run_cell(const ModelSpec& spec, const Dataset& data,
                  std::size_t train_size, std::size_t test_size,
                  const BenchmarkArgs& args, std::size_t value) {
  GridCell cell;
  cell.value = value;
  if (train_size + test_size > data.size()) {
    cell.skipped = true;
    return cell;
  }
  auto plans = make_splits(data.size(), args.splits, train_size, test_size,
                           derive_seed(args.seed, 0xbe, value));
  std::vector<double> accs, secs;
  for (std::size_t s = 0; s < plans.size(); ++s) {
    TrainOptions options;
    options.epochs = args.epochs;
    options.seed = derive_seed(args.seed, 0xbf, value, s);
    options.threads = args.threads;
    TrainResult result = train(spec, data, plans[s], options);
    accs.push_back(result.report.test_accuracy);
    secs.push_back(result.report.train_seconds);
  }
  cell.accuracy = mean_std(accs);
  cell.seconds = mean_std(secs);
  return cell;
}

int cmd_benchmark(const BenchmarkArgs& args) {
  ModelSpec spec = ModelSpec::preset(args.preset);
  Dataset data = read_dataset(args.data_path);
  if (data.empty()) throw ValidationError("dataset is empty");
  const std::size_t length = data[0].signal.size();

  std::vector<GridCell> cells;
  if (args.grid == "timesteps") {
    for (std::size_t target : {std::size_t{1000}, std::size_t{2000},
                               std::size_t{4000}}) {
      if (target > length) {
        cells.push_back({target, true, {}, {}});
        continue;
      }
      Dataset truncated;
      truncated.reserve(data.size());
      for (const auto& ex : data) {
        LabeledTimeseries t;
        t.label = ex.label;
        t.signal.assign(ex.signal.begin(),
                        ex.signal.begin() + static_cast<std::ptrdiff_t>(target));
        truncated.push_back(std::move(t));
      }
      spec.validate(target);
      cells.push_back(run_cell(spec, truncated, args.train_size, args.test_size,
                               args, target));
    }
  } else if (args.grid == "trainsize") {
    spec.validate(length);
    for (std::size_t n_train : {std::size_t{2560}, std::size_t{3157},
                                std::size_t{5137}, std::size_t{6737}})
      cells.push_back(run_cell(spec, data, n_train, args.test_size, args, n_train));
  } else {
    throw ValidationError("--grid must be 'timesteps' or 'trainsize'");
  }

  std::string csv = "grid,value,status,accuracy_mean,accuracy_std,seconds_mean,"
                    "seconds_std\n";
  for (const auto& cell : cells) {
    char line[256];
    if (cell.skipped) {
      std::snprintf(line, sizeof line, "%s,%zu,skipped,,,,\n", args.grid.c_str(),
                    cell.value);
    } else {
      std::snprintf(line, sizeof line, "%s,%zu,ok,%.17g,%.17g,%.17g,%.17g\n",
                    args.grid.c_str(), cell.value, cell.accuracy.mean,
                    cell.accuracy.std, cell.seconds.mean, cell.seconds.std);
    }
    csv += line;
    std::printf("%s", line);
    std::fflush(stdout);
  }
  if (!args.report_out.empty()) write_text_file(args.report_out, csv);
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"calcium-trace cell-type classification toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cmd_gen = app.add_subcommand("generate", "synthesize a labeled dataset");
  cmd_gen->add_option("--profile", gen.profile_path,
                      "class parameter file (default: built-in profile)");
  cmd_gen->add_option("--counts", gen.counts, "per-class example counts PY,PV,SOM,VIP");
  cmd_gen->add_option("--length", gen.length, "timepoints per trace");
  cmd_gen->add_option("--seed", gen.seed, "master seed");
  cmd_gen->add_option("--out", gen.out, "output dataset file")->required();

  TrainArgs tr;
  tr.threads = env_thread_count();
  auto* cmd_tr = app.add_subcommand("train", "train and evaluate over random splits");
  cmd_tr->add_option("--data", tr.data_path, "dataset file")->required();
  cmd_tr->add_option("--preset", tr.preset, "named architecture");
  cmd_tr->add_option("--spec", tr.spec_path, "architecture description file");
  cmd_tr->add_option("--epochs", tr.epochs, "training epochs");
  cmd_tr->add_option("--splits", tr.splits, "number of random train/test splits");
  cmd_tr->add_option("--train-size", tr.train_size, "examples per training split");
  cmd_tr->add_option("--test-size", tr.test_size, "examples per test split");
  cmd_tr->add_option("--seed", tr.seed, "master seed");
  cmd_tr->add_option("--threads", tr.threads, "worker threads (0 = deterministic)");
  cmd_tr->add_option("--out", tr.model_out, "write the best-split model here");
  cmd_tr->add_option("--report", tr.report_out, "write the per-split CSV here");

  EvalArgs ev;
  ev.threads = env_thread_count();
  auto* cmd_ev = app.add_subcommand("eval", "evaluate a saved model on a dataset");
  cmd_ev->add_option("--model", ev.model_path, "model file")->required();
  cmd_ev->add_option("--data", ev.data_path, "dataset file")->required();
  cmd_ev->add_option("--report", ev.report_out, "write the metric CSV here");
  cmd_ev->add_option("--threads", ev.threads, "worker threads");

  std::string gc_family;
  std::uint64_t gc_seed = 1;
  auto* cmd_gc = app.add_subcommand("gradcheck",
                                    "verify gradients against finite differences");
  cmd_gc->add_option("--family", gc_family, "cnn, rnn or lstm")->required();
  cmd_gc->add_option("--seed", gc_seed, "seed for probe inputs and weights");

  BenchmarkArgs bm;
  bm.threads = env_thread_count();
  auto* cmd_bm = app.add_subcommand("benchmark", "accuracy sweeps over a grid");
  cmd_bm->add_option("--data", bm.data_path, "dataset file")->required();
  cmd_bm->add_option("--grid", bm.grid, "timesteps or trainsize")->required();
  cmd_bm->add_option("--preset", bm.preset, "architecture to sweep");
  cmd_bm->add_option("--epochs", bm.epochs, "training epochs per cell");
  cmd_bm->add_option("--splits", bm.splits, "splits per cell");
  cmd_bm->add_option("--train-size", bm.train_size, "training examples (timesteps grid)");
  cmd_bm->add_option("--test-size", bm.test_size, "test examples per split");
  cmd_bm->add_option("--seed", bm.seed, "master seed");
  cmd_bm->add_option("--threads", bm.threads, "worker threads");
  cmd_bm->add_option("--report", bm.report_out, "write the grid CSV here");

  try {
    app.parse(argc, argv);
    if (cmd_gen->parsed()) return cmd_generate(gen);
    if (cmd_tr->parsed()) return cmd_train(tr);
    if (cmd_ev->parsed()) return cmd_eval(ev);
    if (cmd_gc->parsed()) return cmd_gradcheck(gc_family, gc_seed);
    if (cmd_bm->parsed()) return cmd_benchmark(bm);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const caltype::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const caltype::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
