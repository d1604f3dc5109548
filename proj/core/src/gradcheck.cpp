#include "caltype/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "caltype/rng.hpp"
#include "caltype/training.hpp"

namespace caltype {

namespace {

double loss_at(Network& net, std::span<const double> x, std::size_t target) {
  return cross_entropy(net.forward(x), target);
}

} // namespace

double gradcheck_network(Network& net, std::span<const double> x,
                         std::size_t target, double h) {
  net.zero_grads();
  auto probs = net.forward(x);
  net.backward(probs, target);
  net.flush_grads();

  double worst = 0.0;
  for (Tensor* t : net.params()) {
    for (std::size_t k = 0; k < t->value.size(); ++k) {
      double saved = t->value.data()[k];
      t->value.data()[k] = saved + h;
      double up = loss_at(net, x, target);
      t->value.data()[k] = saved - h;
      double down = loss_at(net, x, target);
      t->value.data()[k] = saved;

      double fd = (up - down) / (2.0 * h);
      double an = t->grad.data()[k];
      double scale = std::max({std::fabs(fd), std::fabs(an), 1e-3});
      worst = std::max(worst, std::fabs(fd - an) / scale);
    }
  }
  return worst;
}

std::vector<GradCheckCase> gradcheck_family(Family family, std::uint64_t seed) {
  struct Setup {
    std::string name;
    ModelSpec spec;
    std::size_t length;
  };
  std::vector<Setup> setups;

  auto conv = [](std::size_t f, std::size_t k, std::size_t s) {
    LayerSpec l;
    l.kind = LayerSpec::Kind::kConv;
    l.filters = f;
    l.kernel = k;
    l.stride = s;
    return l;
  };
  auto pool = [](std::size_t p, std::size_t s) {
    LayerSpec l;
    l.kind = LayerSpec::Kind::kMaxPool;
    l.pool = p;
    l.stride = s;
    return l;
  };
  auto dropout = [](double keep) {
    LayerSpec l;
    l.kind = LayerSpec::Kind::kDropout;
    l.keep_prob = keep;
    return l;
  };
  auto cell = [](std::size_t hidden) {
    LayerSpec l;
    l.kind = LayerSpec::Kind::kRecurrent;
    l.hidden = hidden;
    return l;
  };

  if (family == Family::kCnn) {
    ModelSpec plain;
    plain.family = Family::kCnn;
    plain.layers = {conv(3, 4, 1)};
    setups.push_back({"cnn-conv-dense", plain, 16});

    ModelSpec stack;
    stack.family = Family::kCnn;
    stack.layers = {conv(3, 4, 1), pool(2, 2), conv(4, 3, 1), dropout(0.5)};
    setups.push_back({"cnn-conv-pool-conv-dropout-dense", stack, 16});

    ModelSpec strided;
    strided.family = Family::kCnn;
    strided.layers = {conv(2, 5, 2), conv(3, 3, 1)};
    setups.push_back({"cnn-strided", strided, 21});
  } else {
    const char* tag = family == Family::kRnn ? "rnn" : "lstm";
    for (std::size_t t : {std::size_t{1}, std::size_t{2}, std::size_t{3}}) {
      for (std::size_t depth : {std::size_t{1}, std::size_t{2}}) {
        ModelSpec spec;
        spec.family = family;
        spec.timesteps = t;
        for (std::size_t d = 0; d < depth; ++d) spec.layers.push_back(cell(5));
        setups.push_back({std::string(tag) + "-" + std::to_string(depth) +
                              "layer-t" + std::to_string(t),
                          spec, 12});
      }
    }
  }

  std::vector<GradCheckCase> cases;
  for (std::size_t s = 0; s < setups.size(); ++s) {
    const Setup& setup = setups[s];
    setup.spec.validate(setup.length);
    Network net(setup.spec, setup.length, derive_seed(seed, 0x6c, s));
    net.set_training(false); // dropout as identity so the loss is smooth

    Rng rng(derive_seed(seed, 0x6d, s));
    std::vector<double> x(setup.length);
    for (double& v : x) v = rng.normal();
    std::size_t target = static_cast<std::size_t>(rng.below(setup.spec.classes));

    cases.push_back({setup.name, gradcheck_network(net, x, target)});
  }
  return cases;
}

} // namespace caltype
