#include "caltype/model.hpp"

#include <sstream>

#include "caltype/adaboost.hpp"
#include "caltype/config.hpp"

namespace caltype {

std::string family_name(Family f) {
  switch (f) {
    case Family::kCnn: return "cnn";
    case Family::kRnn: return "rnn";
    case Family::kLstm: return "lstm";
    case Family::kAdaBoost: return "adaboost";
  }
  return "?";
}

Family parse_family(const std::string& name) {
  if (name == "cnn") return Family::kCnn;
  if (name == "rnn") return Family::kRnn;
  if (name == "lstm") return Family::kLstm;
  if (name == "adaboost") return Family::kAdaBoost;
  throw ValidationError("unknown model family: " + name);
}

namespace {

const char* layer_kind_name(LayerSpec::Kind k) {
  switch (k) {
    case LayerSpec::Kind::kConv: return "conv";
    case LayerSpec::Kind::kMaxPool: return "maxpool";
    case LayerSpec::Kind::kDropout: return "dropout";
    case LayerSpec::Kind::kRecurrent: return "recurrent";
  }
  return "?";
}

LayerSpec::Kind parse_layer_kind(const std::string& name) {
  if (name == "conv") return LayerSpec::Kind::kConv;
  if (name == "maxpool") return LayerSpec::Kind::kMaxPool;
  if (name == "dropout") return LayerSpec::Kind::kDropout;
  if (name == "recurrent") return LayerSpec::Kind::kRecurrent;
  throw ValidationError("unknown layer kind: " + name);
}

} // namespace

void ModelSpec::validate(std::size_t input_length) const {
  if (classes < 2) throw ValidationError("model: needs at least 2 classes");
  if (input_length < 1) throw ValidationError("model: empty input");

  if (family == Family::kAdaBoost) {
    if (rounds < 1) throw ValidationError("adaboost: needs at least 1 round");
    if (!layers.empty()) throw ValidationError("adaboost: layer list must be empty");
    return;
  }

  if (family == Family::kCnn) {
    if (timesteps != 1)
      throw ValidationError("cnn: timestep folding does not apply");
    std::size_t length = input_length;
    for (const auto& l : layers) {
      switch (l.kind) {
        case LayerSpec::Kind::kConv:
          if (l.filters < 1 || l.kernel < 1 || l.stride < 1)
            throw ValidationError("conv layer: filters, kernel, stride must be >= 1");
          if (length < l.kernel)
            throw ValidationError("conv layer: input length " + std::to_string(length) +
                                  " shorter than kernel " + std::to_string(l.kernel));
          length = (length - l.kernel) / l.stride + 1;
          break;
        case LayerSpec::Kind::kMaxPool:
          if (l.pool < 1 || l.stride < 1)
            throw ValidationError("maxpool layer: pool and stride must be >= 1");
          if (length < l.pool)
            throw ValidationError("maxpool layer: input shorter than pool window");
          length = (length - l.pool) / l.stride + 1;
          break;
        case LayerSpec::Kind::kDropout:
          if (!(l.keep_prob > 0.0) || l.keep_prob > 1.0)
            throw ValidationError("dropout layer: keep probability must be in (0, 1]");
          break;
        case LayerSpec::Kind::kRecurrent:
          throw ValidationError("cnn: recurrent layer not allowed");
      }
    }
    return;
  }

  // rnn / lstm
  if (timesteps < 1 || timesteps > input_length || input_length % timesteps != 0)
    throw ValidationError("recurrent model: T = " + std::to_string(timesteps) +
                          " does not divide N = " + std::to_string(input_length));
  std::size_t n_recurrent = 0;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerSpec::Kind::kRecurrent:
        if (l.hidden < 1)
          throw ValidationError("recurrent layer: hidden size must be >= 1");
        ++n_recurrent;
        break;
      case LayerSpec::Kind::kDropout:
        if (!(l.keep_prob > 0.0) || l.keep_prob > 1.0)
          throw ValidationError("dropout layer: keep probability must be in (0, 1]");
        break;
      default:
        throw ValidationError("recurrent model: only recurrent and dropout layers allowed");
    }
  }
  if (n_recurrent == 0)
    throw ValidationError("recurrent model: needs at least one recurrent layer");
}

std::string ModelSpec::to_text() const {
  std::ostringstream out;
  out << "[model]\n";
  out << "family=" << family_name(family) << "\n";
  out << "classes=" << classes << "\n";
  if (family == Family::kRnn || family == Family::kLstm)
    out << "timesteps=" << timesteps << "\n";
  if (family == Family::kAdaBoost) out << "rounds=" << rounds << "\n";
  for (const auto& l : layers) {
    out << "[layer]\n";
    out << "kind=" << layer_kind_name(l.kind) << "\n";
    switch (l.kind) {
      case LayerSpec::Kind::kConv:
        out << "filters=" << l.filters << "\n";
        out << "kernel=" << l.kernel << "\n";
        out << "stride=" << l.stride << "\n";
        break;
      case LayerSpec::Kind::kMaxPool:
        out << "pool=" << l.pool << "\n";
        out << "stride=" << l.stride << "\n";
        break;
      case LayerSpec::Kind::kDropout:
        out << "keep_prob=" << l.keep_prob << "\n";
        break;
      case LayerSpec::Kind::kRecurrent:
        out << "hidden=" << l.hidden << "\n";
        break;
    }
  }
  return out.str();
}

ModelSpec ModelSpec::from_text(const std::string& text) {
  ModelSpec spec;
  bool saw_model = false;
  for (const auto& section : parse_config(text)) {
    if (section.first == "model") {
      saw_model = true;
      spec.family = parse_family(get_field(section, "family"));
      spec.classes = std::stoul(get_field_or(section, "classes", "4"));
      spec.timesteps = std::stoul(get_field_or(section, "timesteps", "1"));
      spec.rounds = std::stoul(get_field_or(section, "rounds", "100"));
    } else if (section.first == "layer") {
      LayerSpec l;
      l.kind = parse_layer_kind(get_field(section, "kind"));
      switch (l.kind) {
        case LayerSpec::Kind::kConv:
          l.filters = std::stoul(get_field(section, "filters"));
          l.kernel = std::stoul(get_field(section, "kernel"));
          l.stride = std::stoul(get_field_or(section, "stride", "1"));
          break;
        case LayerSpec::Kind::kMaxPool:
          l.pool = std::stoul(get_field(section, "pool"));
          l.stride = std::stoul(get_field_or(section, "stride",
                                             get_field(section, "pool")));
          break;
        case LayerSpec::Kind::kDropout:
          l.keep_prob = std::stod(get_field_or(section, "keep_prob", "0.5"));
          break;
        case LayerSpec::Kind::kRecurrent:
          l.hidden = std::stoul(get_field(section, "hidden"));
          break;
      }
      spec.layers.push_back(l);
    } else {
      throw ValidationError("model spec: unknown section [" + section.first + "]");
    }
  }
  if (!saw_model) throw ValidationError("model spec: missing [model] section");
  return spec;
}

// ---------------------------------------------------------------- presets

namespace {

LayerSpec conv_spec(std::size_t filters) {
  LayerSpec l;
  l.kind = LayerSpec::Kind::kConv;
  l.filters = filters;
  l.kernel = 10;
  l.stride = 1;
  return l;
}

LayerSpec pool_spec() {
  LayerSpec l;
  l.kind = LayerSpec::Kind::kMaxPool;
  l.pool = 2;
  l.stride = 2;
  return l;
}

LayerSpec dropout_spec(double keep = 0.5) {
  LayerSpec l;
  l.kind = LayerSpec::Kind::kDropout;
  l.keep_prob = keep;
  return l;
}

LayerSpec recurrent_spec(std::size_t hidden = 100) {
  LayerSpec l;
  l.kind = LayerSpec::Kind::kRecurrent;
  l.hidden = hidden;
  return l;
}

// First conv layer has 32 filters, deeper ones 64; kernel 10, stride 1.
ModelSpec cnn_preset(std::initializer_list<char> pattern) {
  ModelSpec spec;
  spec.family = Family::kCnn;
  bool first_conv = true;
  for (char c : pattern) {
    switch (c) {
      case 'c':
        spec.layers.push_back(conv_spec(first_conv ? 32 : 64));
        first_conv = false;
        break;
      case 'p': spec.layers.push_back(pool_spec()); break;
      case 'd': spec.layers.push_back(dropout_spec()); break;
    }
  }
  return spec;
}

ModelSpec recurrent_preset(Family family, std::size_t timesteps,
                           std::initializer_list<char> pattern) {
  ModelSpec spec;
  spec.family = family;
  spec.timesteps = timesteps;
  for (char c : pattern) {
    if (c == 'r') spec.layers.push_back(recurrent_spec());
    else if (c == 'd') spec.layers.push_back(dropout_spec());
  }
  return spec;
}

struct PresetEntry {
  const char* name;
  ModelSpec (*make)();
};

ModelSpec make_adaboost() {
  ModelSpec spec;
  spec.family = Family::kAdaBoost;
  spec.rounds = 100;
  return spec;
}

const PresetEntry kPresets[] = {
    {"cnn-1conv", [] { return cnn_preset({'c'}); }},
    {"cnn-2conv", [] { return cnn_preset({'c', 'c'}); }},
    {"cnn-2conv-pool-1conv", [] { return cnn_preset({'c', 'c', 'p', 'c'}); }},
    {"cnn-2conv-pool-2conv", [] { return cnn_preset({'c', 'c', 'p', 'c', 'c'}); }},
    {"cnn-best", [] { return cnn_preset({'c', 'c', 'p', 'c', 'd'}); }},
    {"cnn-2conv-pool-1conv-drop-1conv",
     [] { return cnn_preset({'c', 'c', 'p', 'c', 'd', 'c'}); }},
    {"cnn-2conv-drop-2conv", [] { return cnn_preset({'c', 'c', 'd', 'c', 'c'}); }},
    {"cnn-3conv", [] { return cnn_preset({'c', 'c', 'c'}); }},
    {"rnn-t2", [] { return recurrent_preset(Family::kRnn, 2, {'r'}); }},
    {"rnn2-t2", [] { return recurrent_preset(Family::kRnn, 2, {'r', 'r'}); }},
    {"rnn2-drop1-t2", [] { return recurrent_preset(Family::kRnn, 2, {'r', 'r', 'd', 'r'}); }},
    {"rnn-t5", [] { return recurrent_preset(Family::kRnn, 5, {'r'}); }},
    {"rnn2-t5", [] { return recurrent_preset(Family::kRnn, 5, {'r', 'r'}); }},
    {"rnn2-drop1-t5", [] { return recurrent_preset(Family::kRnn, 5, {'r', 'r', 'd', 'r'}); }},
    {"rnn-t10", [] { return recurrent_preset(Family::kRnn, 10, {'r'}); }},
    {"rnn2-t10", [] { return recurrent_preset(Family::kRnn, 10, {'r', 'r'}); }},
    {"rnn2-drop1-t10", [] { return recurrent_preset(Family::kRnn, 10, {'r', 'r', 'd', 'r'}); }},
    {"lstm-t2", [] { return recurrent_preset(Family::kLstm, 2, {'r'}); }},
    {"lstm2-t2", [] { return recurrent_preset(Family::kLstm, 2, {'r', 'r'}); }},
    {"lstm2-drop1-t2", [] { return recurrent_preset(Family::kLstm, 2, {'r', 'r', 'd', 'r'}); }},
    {"lstm-t5", [] { return recurrent_preset(Family::kLstm, 5, {'r'}); }},
    {"lstm2-t5", [] { return recurrent_preset(Family::kLstm, 5, {'r', 'r'}); }},
    {"lstm2-drop1-t5", [] { return recurrent_preset(Family::kLstm, 5, {'r', 'r', 'd', 'r'}); }},
    {"lstm-t10", [] { return recurrent_preset(Family::kLstm, 10, {'r'}); }},
    {"lstm2-t10", [] { return recurrent_preset(Family::kLstm, 10, {'r', 'r'}); }},
    {"lstm2-drop1-t10", [] { return recurrent_preset(Family::kLstm, 10, {'r', 'r', 'd', 'r'}); }},
    {"adaboost-100", make_adaboost},
};

} // namespace

ModelSpec ModelSpec::preset(const std::string& name) {
  for (const auto& entry : kPresets)
    if (name == entry.name) return entry.make();
  std::string known;
  for (const auto& entry : kPresets) {
    if (!known.empty()) known += ", ";
    known += entry.name;
  }
  throw ValidationError("unknown preset '" + name + "'; available: " + known);
}

std::vector<std::string> ModelSpec::preset_names() {
  std::vector<std::string> names;
  for (const auto& entry : kPresets) names.emplace_back(entry.name);
  return names;
}

// ---------------------------------------------------------------- Network

Network::Network(const ModelSpec& spec, std::size_t input_length,
                 std::uint64_t init_seed)
    : spec_(spec), input_length_(input_length) {
  spec.validate(input_length);
  if (spec.family == Family::kAdaBoost)
    throw ValidationError("adaboost is not a network model");

  if (spec.family == Family::kCnn) {
    std::size_t channels = 1;
    for (const auto& l : spec.layers) {
      switch (l.kind) {
        case LayerSpec::Kind::kConv:
          layers_.push_back(std::make_unique<Conv1D>(l.filters, l.kernel, l.stride, channels));
          layers_.push_back(std::make_unique<ActivationLayer>(Activation::kRelu));
          channels = l.filters;
          break;
        case LayerSpec::Kind::kMaxPool:
          layers_.push_back(std::make_unique<MaxPool1D>(l.pool, l.stride));
          break;
        case LayerSpec::Kind::kDropout:
          layers_.push_back(std::make_unique<Dropout>(l.keep_prob));
          break;
        default: break;
      }
    }
    layers_.push_back(std::make_unique<Flatten>());
    // Trace shapes through validate()'s arithmetic to size the head.
    std::size_t length = input_length;
    channels = 1;
    for (const auto& l : spec.layers) {
      if (l.kind == LayerSpec::Kind::kConv) {
        length = (length - l.kernel) / l.stride + 1;
        channels = l.filters;
      } else if (l.kind == LayerSpec::Kind::kMaxPool) {
        length = (length - l.pool) / l.stride + 1;
      }
    }
    layers_.push_back(std::make_unique<Dense>(spec.classes, channels * length));
  } else {
    std::size_t in_dim = input_length / spec.timesteps;
    std::size_t last_hidden = 0;
    std::size_t remaining = 0;
    for (const auto& l : spec.layers)
      if (l.kind == LayerSpec::Kind::kRecurrent) ++remaining;
    for (const auto& l : spec.layers) {
      if (l.kind == LayerSpec::Kind::kRecurrent) {
        if (spec.family == Family::kRnn)
          layers_.push_back(std::make_unique<RnnLayer>(l.hidden, in_dim));
        else
          layers_.push_back(std::make_unique<LstmLayer>(l.hidden, in_dim));
        in_dim = l.hidden;
        last_hidden = l.hidden;
        --remaining;
        // Stacked layers pass their hidden sequence through a ReLU; the
        // head reads the last layer's h_T directly.
        if (remaining > 0)
          layers_.push_back(std::make_unique<ActivationLayer>(Activation::kRelu));
      } else if (l.kind == LayerSpec::Kind::kDropout) {
        layers_.push_back(std::make_unique<Dropout>(l.keep_prob));
      }
    }
    layers_.push_back(std::make_unique<LastStep>());
    layers_.push_back(std::make_unique<Dense>(spec.classes, last_hidden));
  }

  layers_.front()->needs_input_grad = false;
  Rng rng(derive_seed(init_seed, 0x1717));
  for (auto& layer : layers_) layer->init(rng);
}

Network::Network(const Network& other)
    : spec_(other.spec_), input_length_(other.input_length_) {
  for (const auto& layer : other.layers_) layers_.push_back(layer->clone());
}

std::unique_ptr<Network> Network::clone() const {
  return std::unique_ptr<Network>(new Network(*this));
}

std::vector<double> Network::forward(std::span<const double> trace) {
  if (trace.size() != input_length_)
    throw ShapeError("network: trace length " + std::to_string(trace.size()) +
                     " != model input length " + std::to_string(input_length_));
  Matrix x;
  if (spec_.family == Family::kCnn) {
    x = Matrix(1, trace.size());
    std::copy(trace.begin(), trace.end(), x.data());
  } else {
    x = fold(trace, spec_.timesteps).data;
  }
  for (auto& layer : layers_) x = layer->forward(x);
  forward_done_ = true;
  return softmax(std::span<const double>(x.data(), x.size()));
}

void Network::backward(std::span<const double> probs, std::size_t target) {
  if (!forward_done_)
    throw ValidationError("network backward called before forward");
  if (probs.size() != spec_.classes || target >= spec_.classes)
    throw ShapeError("network backward: bad probability vector or target");
  // Gradient at the logit level of softmax + cross-entropy.
  Matrix g(spec_.classes, 1);
  for (std::size_t i = 0; i < probs.size(); ++i) g[i] = probs[i];
  g[target] -= 1.0;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    g = (*it)->backward(g);
}

std::vector<Tensor*> Network::params() {
  std::vector<Tensor*> out;
  for (auto& layer : layers_)
    for (Tensor* t : layer->params()) out.push_back(t);
  return out;
}

void Network::zero_grads() {
  flush_grads(); // discard any deferred contributions along with the rest
  for (Tensor* t : params()) t->grad.set_zero();
}

void Network::flush_grads() {
  for (auto& layer : layers_) layer->flush_grads();
}

void Network::scale_grads(double s) {
  for (Tensor* t : params()) t->grad *= s;
}

void Network::copy_params_from(const Network& other) {
  auto& self = *this;
  auto src = const_cast<Network&>(other).params();
  auto dst = self.params();
  if (src.size() != dst.size())
    throw ShapeError("copy_params_from: mismatched networks");
  for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
}

void Network::set_training(bool training) {
  for (auto& layer : layers_) layer->set_training(training);
}

void Network::reseed_dropout(std::uint64_t seed) {
  std::size_t index = 0;
  for (auto& layer : layers_)
    if (auto* d = dynamic_cast<Dropout*>(layer.get()))
      d->reseed(derive_seed(seed, 0xd0, index++));
}

std::size_t Network::cell_steps() const {
  std::size_t total = 0;
  for (const auto& layer : layers_)
    if (const auto* r = dynamic_cast<const RecurrentLayer*>(layer.get()))
      total += r->cell_steps();
  return total;
}

// ------------------------------------------------------------ TrainedModel

std::vector<double> TrainedModel::predict_proba(std::span<const double> trace) const {
  if (!net) throw ValidationError("predict_proba: not a network model");
  auto z = zscore_apply(norm, trace);
  net->set_training(false);
  return net->forward(z);
}

std::size_t TrainedModel::predict(std::span<const double> trace) const {
  if (ensemble) return ensemble->predict(trace);
  auto probs = predict_proba(trace);
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i)
    if (probs[i] > probs[best]) best = i;
  return best;
}

std::uint64_t TrainedModel::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&norm.mean, sizeof(double));
  mix(&norm.std, sizeof(double));
  if (net) {
    for (Tensor* t : net->params())
      mix(t->value.data(), t->value.size() * sizeof(double));
  }
  if (ensemble) {
    for (const Stump& s : ensemble->rounds) {
      mix(&s.feature, sizeof(s.feature));
      mix(&s.threshold, sizeof(s.threshold));
      mix(&s.polarity, sizeof(s.polarity));
      mix(&s.cls, sizeof(s.cls));
      mix(&s.alpha, sizeof(s.alpha));
    }
  }
  return h;
}

} // namespace caltype
