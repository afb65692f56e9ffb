#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "shift_audit/bounds.hpp"
#include "shift_audit/densities.hpp"
#include "shift_audit/divergence.hpp"
#include "shift_audit/hypotheses.hpp"
#include "shift_audit/synthetic.hpp"
#include "shift_audit/trainer.hpp"
#include "shift_audit/weighting.hpp"

namespace shift_audit {

inline constexpr const char* kToolVersion = "0.1.0";

// Sample CSV: header row "x0,...,x{d-1}[,y][,domain]"; y in {0,1}, domain in
// {source,target}. '.' decimal separator and LF line endings on output.
SampleSet read_sample_csv_text(std::string_view text, const std::string& name);
SampleSet read_sample_csv(const std::string& path);
std::string sample_csv_text(const SampleSet& samples);
void write_sample_csv(const std::string& path, const SampleSet& samples);

// Weights aligned with an input sample file, as one extra column.
std::string weights_csv_text(const SampleSet& samples, std::span<const double> weights);

// Write-to-temp-then-rename, so readers never observe a partial file.
void atomic_write_text(const std::string& path, const std::string& text);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64_file(const std::string& path);
std::string digest_hex(std::uint64_t digest);

nlohmann::json to_json(const DivergenceEstimate& estimate);
nlohmann::json to_json(const BoundReport& report, int theorem);
nlohmann::json to_json(const EtaReport& report);

nlohmann::json to_json(const Density& density);
Density density_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Representation& representation);
Representation representation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Predictor& predictor);
Predictor predictor_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Hypothesis& hypothesis);
Hypothesis hypothesis_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HypothesisClass& cls);
HypothesisClass hypothesis_class_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ProblemDescriptor& descriptor);
// Rebuilds a generated problem from its descriptor.
SyntheticProblem problem_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainedModel& model);
std::string training_trace_csv(const TrainedModel& model);

std::string comparison_table_csv(const BoundComparisonTable& table);

struct ManifestInput {
  std::string path;
  std::uint64_t digest = 0;
};

// Everything needed to reproduce a run bit-for-bit within one build.
nlohmann::json make_run_manifest(const std::string& command, const std::vector<ManifestInput>& inputs,
                                 const nlohmann::json& config);

}  // namespace shift_audit
