#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dkd/adjustment.hpp"
#include "dkd/affinity.hpp"
#include "dkd/geometry.hpp"
#include "dkd/probability.hpp"

namespace dkd::io {

// Plain comma-separated tables, UTF-8, LF line endings, '.' decimal point.
// Sample ids may not contain commas or line breaks.
//
//   logits:   sample_id,label,f_0,...,f_{C-1}
//   features: sample_id,label,h_0,...,h_{D-1}
//   probs:    sample_id,label,p_0,...,p_{C-1}[,tau_star]
//
// Reals are written with 17 significant digits so that a write/read cycle
// reproduces every double exactly.

std::string format_real(double value);

std::vector<LogitRecord> parse_logits_csv(std::istream& in, std::string_view source);
std::vector<LogitRecord> read_logits_csv(const std::filesystem::path& path);
void write_logits_csv(std::ostream& out, std::span<const LogitRecord> records);
void write_logits_csv(const std::filesystem::path& path, std::span<const LogitRecord> records);

std::vector<FeatureRecord> parse_features_csv(std::istream& in, std::string_view source);
std::vector<FeatureRecord> read_features_csv(const std::filesystem::path& path);
void write_features_csv(std::ostream& out, std::span<const FeatureRecord> records);
void write_features_csv(const std::filesystem::path& path, std::span<const FeatureRecord> records);

/// One row per sample; a tau_star column is added when any row came from ISATS.
void write_probabilities_csv(const std::filesystem::path& path,
                             std::span<const LogitRecord> records,
                             std::span<const ProbabilityVector> probs);

/// Class priors in the logits layout: one row per class, sample_id
/// "prior-c<class>-n<count>-t<tau0>", label = class, f_i = mean probability.
void write_priors_csv(const std::filesystem::path& path, std::span<const ClassPrior> priors);
std::vector<ClassPrior> read_priors_csv(const std::filesystem::path& path);

/// Per-sample affinity rows: sample_id,overlap_ratio,intersection,spearman,kendall_signed,kendall_indicator
void write_affinity_csv(const std::filesystem::path& path, const AffinityReport& report);

/// Long-format histogram: k,intersection,count
void write_histogram_csv(const std::filesystem::path& path, const OverlapHistogram& histogram);

}  // namespace dkd::io
