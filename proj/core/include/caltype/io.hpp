#pragma once

#include <string>

#include "caltype/metrics.hpp"
#include "caltype/model.hpp"
#include "caltype/sim.hpp"

namespace caltype {

// Dataset file ("CALTS1"): header with version, trace length, example
// count and class names; one record per example (label byte + N
// little-endian 32-bit floats).
void write_dataset(const std::string& path, const Dataset& data, std::size_t length);
Dataset read_dataset(const std::string& path);
std::size_t dataset_length(const std::string& path); // trace length from the header

// Model file ("CALMD1"): spec text, normalization stats, then parameter
// tensors in declaration order as little-endian 64-bit reals with shape
// prefixes.
void write_model(const std::string& path, const TrainedModel& model);
TrainedModel read_model(const std::string& path);

// Class profiles for the generator, in the key=value config format with
// one section per cell type.
Profile read_profile(const std::string& path);
void write_profile(const std::string& path, const Profile& profile);

/// Training report CSV: header row, one row per split, one aggregate row
/// (mean columns filled from split rows, std columns alongside).
std::string train_report_csv(const std::vector<EvalReport>& splits);

/// Evaluation report CSV: metric,class,value rows (accuracy, per-class
/// precision/recall/specificity, normalized confusion entries).
std::string eval_report_csv(const EvalReport& report);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace caltype
