#include "caltype/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "caltype/rng.hpp"

namespace caltype {

void ClassParams::validate() const {
  if (!(tau_rise > 0.0) || !(tau_decay > tau_rise))
    throw ValidationError("class params: need tau_decay > tau_rise > 0");
  if (spike_rate < 0.0 || spike_rate > 1.0)
    throw ValidationError("class params: spike rate per timestep must be in [0, 1]");
  if (noise_std < 0.0) throw ValidationError("class params: negative noise");
  if (!(amplitude_mean > 0.0))
    throw ValidationError("class params: amplitude mean must be positive");
  if (amplitude_cv < 0.0) throw ValidationError("class params: negative amplitude cv");
  if (drift_amp < 0.0) throw ValidationError("class params: negative drift amplitude");
  if (!(drift_period > 0.0)) throw ValidationError("class params: drift period must be positive");
}

Profile default_profile() {
  Profile p;
  auto& py = p[static_cast<std::size_t>(CellType::kPY)];
  // Amplitudes are calibrated so the expected trace mean is the same for
  // every class (rate * amplitude * kernel area ~ 0.30); class identity
  // lives in the transient kinetics and the slow-rhythm period, not in
  // trivial level offsets. Drift amplitude is shared so summary statistics
  // stay uninformative about the rhythm.
  py.spike_rate = 0.01; py.tau_rise = 3.0; py.tau_decay = 60.0; py.amplitude_mean = 0.43;
  auto& pv = p[static_cast<std::size_t>(CellType::kPV)];
  pv.spike_rate = 0.12; pv.tau_rise = 2.0; pv.tau_decay = 25.0; pv.amplitude_mean = 0.080;
  pv.noise_std = 0.121; // tops total variance up to the SOM level
  pv.drift_period = 500.0;
  auto& som = p[static_cast<std::size_t>(CellType::kSOM)];
  som.spike_rate = 0.05; som.tau_rise = 2.0; som.tau_decay = 40.0; som.amplitude_mean = 0.128;
  som.drift_period = 1000.0;
  auto& vip = p[static_cast<std::size_t>(CellType::kVIP)];
  vip.spike_rate = 0.07; vip.tau_rise = 2.0; vip.tau_decay = 35.0; vip.amplitude_mean = 0.103;
  vip.noise_std = 0.104; // tops total variance up to the SOM level
  vip.drift_period = 700.0;
  return p;
}

double calcium_kernel(double t, double tau_rise, double tau_decay) {
  if (t < 0.0) return 0.0;
  // Peak location of exp(-t/td) - exp(-t/tr).
  double t_peak = std::log(tau_decay / tau_rise) * tau_rise * tau_decay /
                  (tau_decay - tau_rise);
  double peak = std::exp(-t_peak / tau_decay) - std::exp(-t_peak / tau_rise);
  return (std::exp(-t / tau_decay) - std::exp(-t / tau_rise)) / peak;
}

std::vector<std::uint8_t> generate_spikes(double rate, std::size_t n,
                                          std::uint64_t seed) {
  if (rate < 0.0) throw ValidationError("generate_spikes: negative rate");
  if (rate > 1.0)
    throw ValidationError("generate_spikes: rate per timestep exceeds 1");
  std::vector<std::uint8_t> spikes(n, 0);
  Rng rng(seed);
  for (std::size_t t = 0; t < n; ++t) spikes[t] = rng.bernoulli(rate) ? 1 : 0;
  return spikes;
}

std::vector<double> spikes_to_fluorescence(std::span<const std::uint8_t> spikes,
                                           const ClassParams& params,
                                           std::uint64_t seed) {
  params.validate();
  const std::size_t n = spikes.size();
  std::vector<double> trace(n, 0.0);
  Rng rng(seed);
  double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  // Precompute the unit-peak kernel out to where the decay tail is
  // negligible.
  std::size_t kernel_len = std::min(
      n, static_cast<std::size_t>(std::ceil(params.tau_decay * std::log(1e4))) + 1);
  std::vector<double> kernel(kernel_len);
  for (std::size_t t = 0; t < kernel_len; ++t)
    kernel[t] = calcium_kernel(static_cast<double>(t), params.tau_rise, params.tau_decay);

  // Log-normal amplitude with mean amplitude_mean and the given cv.
  double sigma2 = std::log(1.0 + params.amplitude_cv * params.amplitude_cv);
  double mu = std::log(params.amplitude_mean) - 0.5 * sigma2;
  double sigma = std::sqrt(sigma2);

  for (std::size_t t = 0; t < n; ++t) {
    if (!spikes[t]) continue;
    double amp = params.amplitude_cv == 0.0
                     ? params.amplitude_mean
                     : std::exp(mu + sigma * rng.normal());
    std::size_t len = std::min(kernel_len, n - t);
    for (std::size_t k = 0; k < len; ++k) trace[t + k] += amp * kernel[k];
  }

  if (params.noise_std > 0.0)
    for (double& v : trace) v += params.noise_std * rng.normal();
  if (params.drift_amp > 0.0) {
    double w = 2.0 * std::numbers::pi / params.drift_period;
    for (std::size_t t = 0; t < n; ++t)
      trace[t] += params.drift_amp * std::sin(w * static_cast<double>(t) + phase);
  }
  return trace;
}

Dataset generate_dataset(const Profile& profile,
                         const std::array<std::size_t, kNumCellTypes>& n_per_class,
                         std::size_t n, std::uint64_t master_seed) {
  if (n < 1) throw ValidationError("generate_dataset: trace length must be >= 1");
  for (const auto& params : profile) params.validate();
  Dataset data;
  for (std::size_t cls = 0; cls < kNumCellTypes; ++cls) {
    const auto& params = profile[cls];
    for (std::size_t i = 0; i < n_per_class[cls]; ++i) {
      std::uint64_t seed = derive_seed(master_seed, cls, i);
      LabeledTimeseries ex;
      ex.label = static_cast<CellType>(cls);
      ex.provenance = seed;
      auto spikes = generate_spikes(params.spike_rate, n, seed);
      ex.signal = spikes_to_fluorescence(spikes, params, derive_seed(seed, 1));
      data.push_back(std::move(ex));
    }
  }
  Rng rng(derive_seed(master_seed, 0xd5));
  rng.shuffle(data);
  return data;
}

Profile shift_profile(const Profile& profile, double severity, std::uint64_t seed) {
  if (severity < 0.0) throw ValidationError("shift_profile: negative severity");
  if (severity >= 1.0)
    throw ValidationError("shift_profile: severity must be below 1");
  Profile out = profile;
  Rng rng(seed);
  for (auto& params : out) {
    params.spike_rate =
        std::min(1.0, params.spike_rate * rng.uniform(1.0 - severity, 1.0 + severity));
    params.tau_rise *= rng.uniform(1.0 - severity, 1.0 + severity);
    params.tau_decay *= rng.uniform(1.0 - severity, 1.0 + severity);
    if (params.tau_decay <= params.tau_rise)
      params.tau_decay = params.tau_rise * 1.5;
    params.noise_std *= rng.uniform(1.0 - severity, 1.0 + severity);
  }
  return out;
}

} // namespace caltype
