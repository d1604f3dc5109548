#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "caltype/errors.hpp"

namespace caltype {

/// The four neuronal classes. Codes are part of the dataset file format.
enum class CellType : std::uint8_t { kPY = 0, kPV = 1, kSOM = 2, kVIP = 3 };

inline constexpr std::size_t kNumCellTypes = 4;

inline constexpr std::array<const char*, kNumCellTypes> kCellTypeNames = {
    "PY", "PV", "SOM", "VIP"};

inline const char* cell_type_name(CellType t) {
  return kCellTypeNames[static_cast<std::size_t>(t)];
}

/// One fluorescence trace plus its label.
struct LabeledTimeseries {
  std::vector<double> signal;
  CellType label = CellType::kPY;
  std::uint64_t provenance = 0; // generator seed, or 0 when loaded from file
};

using Dataset = std::vector<LabeledTimeseries>;

/// Global scalar z-score statistics pooled over every timepoint of every
/// training trace.
struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

NormStats zscore_fit(const Dataset& training);
std::vector<double> zscore_apply(const NormStats& stats, std::span<const double> x);
std::vector<double> zscore_invert(const NormStats& stats, std::span<const double> z);

} // namespace caltype
