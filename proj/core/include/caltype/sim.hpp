#pragma once

#include <array>
#include <cstdint>

#include "caltype/dataset.hpp"

namespace caltype {

/// Per-class generator parameters. Timesteps are dimensionless; amplitudes
/// are in arbitrary fluorescence units.
struct ClassParams {
  double spike_rate = 0.05;    // events per timestep (Bernoulli probability)
  double tau_rise = 2.0;       // timesteps
  double tau_decay = 40.0;     // timesteps, must exceed tau_rise
  double amplitude_mean = 0.5; // transient peak height
  double amplitude_cv = 0.3;   // log-normal jitter, 0 = deterministic
  double noise_std = 0.08;     // additive Gaussian noise
  double drift_amp = 0.1;      // slow sinusoidal baseline drift
  double drift_period = 1500.0;

  void validate() const;
};

using Profile = std::array<ClassParams, kNumCellTypes>;

/// Defaults reflecting the qualitative biology: sparse large PY
/// transients, dense fast PV activity, SOM/VIP intermediate and
/// deliberately overlapping.
Profile default_profile();

/// Double-exponential indicator kernel normalized to unit peak.
double calcium_kernel(double t, double tau_rise, double tau_decay);

/// Independent Bernoulli(rate) per timestep.
std::vector<std::uint8_t> generate_spikes(double rate, std::size_t n,
                                          std::uint64_t seed);

/// Superimposes one kernel per spike (log-normal amplitude), then adds
/// Gaussian noise and a seeded-phase sinusoidal drift.
std::vector<double> spikes_to_fluorescence(std::span<const std::uint8_t> spikes,
                                           const ClassParams& params,
                                           std::uint64_t seed);

/// Exact class counts, per-example seeds derived from (master_seed, class,
/// index), output order shuffled by master_seed.
Dataset generate_dataset(const Profile& profile,
                         const std::array<std::size_t, kNumCellTypes>& n_per_class,
                         std::size_t n, std::uint64_t master_seed);

/// Cross-dataset distribution-shift approximation: rate, taus and noise of
/// each class scaled by independent factors in [1-severity, 1+severity].
Profile shift_profile(const Profile& profile, double severity, std::uint64_t seed);

} // namespace caltype
