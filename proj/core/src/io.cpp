#include "caltype/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "caltype/adaboost.hpp"
#include "caltype/config.hpp"

namespace caltype {

// ------------------------------------------------------------ config text

std::vector<ConfigSection> parse_config(const std::string& text) {
  std::vector<ConfigSection> sections;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("config line " + std::to_string(line_no) +
                              ": unterminated section header");
      sections.emplace_back(line.substr(1, line.size() - 2),
                            std::map<std::string, std::string>{});
    } else {
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ValidationError("config line " + std::to_string(line_no) +
                              ": expected key=value");
      if (sections.empty())
        throw ValidationError("config line " + std::to_string(line_no) +
                              ": key=value before any [section]");
      std::string key = line.substr(0, eq);
      std::string value = line.substr(eq + 1);
      auto trim = [](std::string& s) {
        auto a = s.find_first_not_of(" \t");
        auto b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
      };
      trim(key);
      trim(value);
      sections.back().second[key] = value;
    }
  }
  return sections;
}

std::string get_field(const ConfigSection& section, const std::string& key) {
  auto it = section.second.find(key);
  if (it == section.second.end())
    throw ValidationError("config section [" + section.first + "]: missing key '" +
                          key + "'");
  return it->second;
}

std::string get_field_or(const ConfigSection& section, const std::string& key,
                         const std::string& fallback) {
  auto it = section.second.find(key);
  return it == section.second.end() ? fallback : it->second;
}

// ----------------------------------------------------------- binary plumbing

namespace {

constexpr char kDatasetMagic[6] = {'C', 'A', 'L', 'T', 'S', '1'};
constexpr char kModelMagic[6] = {'C', 'A', 'L', 'M', 'D', '1'};
constexpr std::uint32_t kFormatVersion = 1;

// On-disk integers and reals are little-endian; this code assumes a
// little-endian host.
template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated file while reading " + what);
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

void check_magic(std::istream& in, const char (&magic)[6], const std::string& path) {
  char buf[6];
  in.read(buf, 6);
  if (!in || std::memcmp(buf, magic, 6) != 0)
    throw IoError("'" + path + "' is not a " + std::string(magic, 6) + " file");
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

} // namespace

// ------------------------------------------------------------ dataset file

void write_dataset(const std::string& path, const Dataset& data, std::size_t length) {
  for (const auto& ex : data)
    if (ex.signal.size() != length)
      throw ValidationError("write_dataset: trace length differs from header length");
  auto out = open_out(path);
  out.write(kDatasetMagic, 6);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(length));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kNumCellTypes));
  for (const char* name : kCellTypeNames) {
    std::uint8_t len = static_cast<std::uint8_t>(std::strlen(name));
    put(out, len);
    out.write(name, len);
  }
  for (const auto& ex : data) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(ex.label));
    for (double v : ex.signal) put<float>(out, static_cast<float>(v));
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
  auto in = open_in(path);
  check_magic(in, kDatasetMagic, path);
  auto version = get<std::uint32_t>(in, "version");
  if (version != kFormatVersion)
    throw IoError("'" + path + "': unsupported dataset version " +
                  std::to_string(version));
  auto length = get<std::uint32_t>(in, "trace length");
  auto count = get<std::uint32_t>(in, "example count");
  auto classes = get<std::uint32_t>(in, "class count");
  for (std::uint32_t c = 0; c < classes; ++c) {
    auto len = get<std::uint8_t>(in, "class name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw IoError("truncated class name in '" + path + "'");
  }
  Dataset data;
  data.reserve(count);
  std::vector<float> buf(length);
  for (std::uint32_t k = 0; k < count; ++k) {
    auto label = get<std::uint8_t>(in, "record label");
    if (label >= classes)
      throw IoError("'" + path + "': record " + std::to_string(k) +
                    " has label " + std::to_string(label) + " >= " +
                    std::to_string(classes) + " classes");
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(length * sizeof(float)));
    if (!in) throw IoError("truncated record in '" + path + "'");
    LabeledTimeseries ex;
    ex.label = static_cast<CellType>(label);
    ex.signal.assign(buf.begin(), buf.end());
    data.push_back(std::move(ex));
  }
  return data;
}

std::size_t dataset_length(const std::string& path) {
  auto in = open_in(path);
  check_magic(in, kDatasetMagic, path);
  get<std::uint32_t>(in, "version");
  return get<std::uint32_t>(in, "trace length");
}

// -------------------------------------------------------------- model file

void write_model(const std::string& path, const TrainedModel& model) {
  auto out = open_out(path);
  out.write(kModelMagic, 6);
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.input_length));
  put<double>(out, model.norm.mean);
  put<double>(out, model.norm.std);
  std::string spec = model.spec.to_text();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(spec.size()));
  out.write(spec.data(), static_cast<std::streamsize>(spec.size()));

  auto write_tensor = [&out](const Matrix& m) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  };

  if (model.ensemble) {
    Matrix rounds(model.ensemble->rounds.size(), 6);
    for (std::size_t r = 0; r < model.ensemble->rounds.size(); ++r) {
      const Stump& s = model.ensemble->rounds[r];
      rounds(r, 0) = static_cast<double>(s.feature);
      rounds(r, 1) = s.threshold;
      rounds(r, 2) = static_cast<double>(s.polarity);
      rounds(r, 3) = static_cast<double>(s.cls);
      rounds(r, 4) = static_cast<double>(s.out_cls);
      rounds(r, 5) = s.alpha;
    }
    put<std::uint32_t>(out, 1);
    write_tensor(rounds);
  } else if (model.net) {
    auto params = model.net->params();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const Tensor* t : params) write_tensor(t->value);
  } else {
    throw ValidationError("write_model: model holds neither network nor ensemble");
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

TrainedModel read_model(const std::string& path) {
  auto in = open_in(path);
  check_magic(in, kModelMagic, path);
  auto version = get<std::uint32_t>(in, "version");
  if (version != kFormatVersion)
    throw IoError("'" + path + "': unsupported model version " + std::to_string(version));

  TrainedModel model;
  model.input_length = get<std::uint32_t>(in, "input length");
  model.norm.mean = get<double>(in, "normalization mean");
  model.norm.std = get<double>(in, "normalization std");
  auto spec_len = get<std::uint32_t>(in, "spec length");
  std::string spec_text(spec_len, '\0');
  in.read(spec_text.data(), spec_len);
  if (!in) throw IoError("truncated model spec in '" + path + "'");
  model.spec = ModelSpec::from_text(spec_text);

  auto read_tensor = [&in, &path](const std::string& what) {
    auto rows = get<std::uint32_t>(in, what + " rows");
    auto cols = get<std::uint32_t>(in, what + " cols");
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw IoError("truncated tensor in '" + path + "'");
    return m;
  };

  auto tensor_count = get<std::uint32_t>(in, "tensor count");
  if (model.spec.family == Family::kAdaBoost) {
    if (tensor_count != 1)
      throw IoError("'" + path + "': boosting model must hold one tensor");
    Matrix rounds = read_tensor("rounds");
    if (rounds.cols() != 6) throw IoError("'" + path + "': malformed rounds tensor");
    auto ensemble = std::make_shared<StumpEnsemble>();
    ensemble->classes = model.spec.classes;
    for (std::size_t r = 0; r < rounds.rows(); ++r) {
      Stump s;
      s.feature = static_cast<std::size_t>(rounds(r, 0));
      s.threshold = rounds(r, 1);
      s.polarity = rounds(r, 2) < 0 ? -1 : +1;
      s.cls = static_cast<std::size_t>(rounds(r, 3));
      s.out_cls = static_cast<std::size_t>(rounds(r, 4));
      s.alpha = rounds(r, 5);
      ensemble->rounds.push_back(s);
    }
    model.ensemble = std::move(ensemble);
  } else {
    model.net = std::make_unique<Network>(model.spec, model.input_length, 0);
    auto params = model.net->params();
    if (params.size() != tensor_count)
      throw IoError("'" + path + "': expected " + std::to_string(params.size()) +
                    " tensors, found " + std::to_string(tensor_count));
    for (Tensor* t : params) {
      Matrix m = read_tensor("parameter");
      if (!m.same_shape(t->value))
        throw IoError("'" + path + "': tensor shape mismatch");
      t->value = std::move(m);
    }
  }
  return model;
}

// ----------------------------------------------------------- profile files

Profile read_profile(const std::string& path) {
  Profile profile = default_profile();
  bool seen[kNumCellTypes] = {};
  for (const auto& section : parse_config(read_text_file(path))) {
    int cls = -1;
    for (std::size_t c = 0; c < kNumCellTypes; ++c)
      if (section.first == kCellTypeNames[c]) cls = static_cast<int>(c);
    if (cls < 0)
      throw ValidationError("profile '" + path + "': unknown section [" +
                            section.first + "]");
    seen[cls] = true;
    ClassParams& p = profile[static_cast<std::size_t>(cls)];
    p.spike_rate = std::stod(get_field(section, "spike_rate"));
    p.tau_rise = std::stod(get_field(section, "tau_rise"));
    p.tau_decay = std::stod(get_field(section, "tau_decay"));
    p.amplitude_mean = std::stod(get_field(section, "amplitude_mean"));
    p.amplitude_cv = std::stod(get_field_or(section, "amplitude_cv", "0.3"));
    p.noise_std = std::stod(get_field_or(section, "noise_std", "0.08"));
    p.drift_amp = std::stod(get_field_or(section, "drift_amp", "0.1"));
    p.drift_period = std::stod(get_field_or(section, "drift_period", "1500"));
    p.validate();
  }
  for (std::size_t c = 0; c < kNumCellTypes; ++c)
    if (!seen[c])
      throw ValidationError("profile '" + path + "': missing section [" +
                            std::string(kCellTypeNames[c]) + "]");
  return profile;
}

void write_profile(const std::string& path, const Profile& profile) {
  std::ostringstream out;
  for (std::size_t c = 0; c < kNumCellTypes; ++c) {
    const ClassParams& p = profile[c];
    out << "[" << kCellTypeNames[c] << "]\n";
    out << "spike_rate=" << fmt(p.spike_rate) << "\n";
    out << "tau_rise=" << fmt(p.tau_rise) << "\n";
    out << "tau_decay=" << fmt(p.tau_decay) << "\n";
    out << "amplitude_mean=" << fmt(p.amplitude_mean) << "\n";
    out << "amplitude_cv=" << fmt(p.amplitude_cv) << "\n";
    out << "noise_std=" << fmt(p.noise_std) << "\n";
    out << "drift_amp=" << fmt(p.drift_amp) << "\n";
    out << "drift_period=" << fmt(p.drift_period) << "\n";
  }
  write_text_file(path, out.str());
}

// ------------------------------------------------------------- CSV reports

namespace {

std::string opt_cell(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string();
}

} // namespace

std::string train_report_csv(const std::vector<EvalReport>& splits) {
  std::ostringstream out;
  out << "split,accuracy,accuracy_std,train_seconds,train_seconds_std";
  for (const char* metric : {"precision", "recall", "specificity"})
    for (const char* cls : kCellTypeNames)
      out << "," << metric << "_" << cls << "," << metric << "_" << cls << "_std";
  out << "\n";

  for (std::size_t s = 0; s < splits.size(); ++s) {
    const auto& r = splits[s];
    out << s << "," << fmt(r.accuracy) << ",," << fmt(r.train_seconds) << ",";
    for (const auto* metric : {&r.metrics.precision, &r.metrics.recall,
                               &r.metrics.specificity})
      for (std::size_t c = 0; c < kNumCellTypes; ++c)
        out << "," << opt_cell((*metric)[c]) << ",";
    out << "\n";
  }

  auto agg = aggregate(splits);
  out << "aggregate," << fmt(agg.accuracy.mean) << "," << fmt(agg.accuracy.std) << ","
      << fmt(agg.train_seconds.mean) << "," << fmt(agg.train_seconds.std);
  for (const auto* metric : {&agg.precision, &agg.recall, &agg.specificity})
    for (std::size_t c = 0; c < kNumCellTypes; ++c) {
      const auto& v = (*metric)[c];
      out << "," << (v ? fmt(v->mean) : "") << "," << (v ? fmt(v->std) : "");
    }
  out << "\n";
  return out.str();
}

std::string eval_report_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "metric,class,value\n";
  out << "accuracy,," << fmt(report.accuracy) << "\n";
  for (std::size_t c = 0; c < report.cm.classes; ++c) {
    out << "precision," << kCellTypeNames[c] << ","
        << opt_cell(report.metrics.precision[c]) << "\n";
    out << "recall," << kCellTypeNames[c] << ","
        << opt_cell(report.metrics.recall[c]) << "\n";
    out << "specificity," << kCellTypeNames[c] << ","
        << opt_cell(report.metrics.specificity[c]) << "\n";
  }
  Matrix norm = report.cm.normalized();
  for (std::size_t r = 0; r < report.cm.classes; ++r)
    for (std::size_t c = 0; c < report.cm.classes; ++c)
      out << "confusion," << kCellTypeNames[r] << ":" << kCellTypeNames[c] << ","
          << fmt(norm(r, c)) << "\n";
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  auto out = open_out(path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

} // namespace caltype
