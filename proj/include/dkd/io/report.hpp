#pragma once

#include <filesystem>

#include <json.hpp>

#include "dkd/affinity.hpp"
#include "dkd/geometry.hpp"
#include "dkd/io/manifest.hpp"
#include "dkd/lab/suites.hpp"

namespace dkd::io {

using Json = nlohmann::ordered_json;

Json to_json(const MetricSummary& summary);
Json to_json(const AngleStats& stats);
/// Aggregates only; per-sample rows go to CSV.
Json affinity_summary(const AffinityReport& report);

Json to_json(const lab::GroupTaskSpec& spec);
Json to_json(const lab::TrainConfig& config);
Json to_json(const lab::ObservationConfig& config);
Json to_json(const lab::MismatchConfig& config);

/// Missing keys keep their defaults; unknown keys are rejected with ConfigError.
lab::GroupTaskSpec task_spec_from_json(const Json& j);
lab::TrainConfig train_config_from_json(const Json& j);
lab::ObservationConfig observation_config_from_json(const Json& j);
lab::MismatchConfig mismatch_config_from_json(const Json& j);

/// Reads a JSON file; ParseError on malformed input.
Json read_json(const std::filesystem::path& path);

/// teachers.csv, pairs.csv, angles.csv, exported logits/features
/// per teacher, summary.json.
void write_observation_report(const std::filesystem::path& dir, const lab::ObservationReport& report,
                              const RunManifest& manifest);

/// cells.csv, teachers.csv, summary.json.
void write_mismatch_report(const std::filesystem::path& dir, const lab::MismatchReport& report,
                           const RunManifest& manifest);

}  // namespace dkd::io
