#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dkd/affinity.hpp"
#include "dkd/geometry.hpp"
#include "dkd/lab/train.hpp"

namespace dkd::lab {

/// Logits of `model` on every sample of `data`, with the dataset's ids and labels.
std::vector<LogitRecord> logit_records(const MlpModel& model, const Dataset& data);
std::vector<FeatureRecord> feature_records(const MlpModel& model, const Dataset& data);

/// Mean over samples of the population std of the non-ground-truth
/// probabilities at temperature `tau`.
double mean_non_gt_std(std::span<const LogitRecord> records, double tau);

// ---------------------------------------------------------------------------
// Capacity observations: distinctness of non-ground-truth probabilities and
// cross-capacity rank consistency.

struct ObservationConfig {
  GroupTaskSpec task;
  /// Hidden widths per teacher; the last entry is the feature layer.
  std::vector<std::vector<std::size_t>> capacities{{16, 8}, {64, 64, 8}, {256, 256, 8}};
  TrainConfig teacher;
  double tau = 4.0;
  std::size_t k = 5;
  bool exclude_gt = false;
  std::size_t angle_pair_cap = kDefaultMaxPairsPerBucket;
  RuleScope rule_scope = RuleScope::with_target;
};

struct TeacherObservation {
  std::vector<std::size_t> hidden;
  std::size_t parameter_count = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double mean_non_gt_std = 0.0;  ///< at the suite temperature, training set
  AngleStats angles;
  double rule_kendall = 0.0;     ///< mean over training samples
  double rule_non_gt_std = 0.0;  ///< mean std of the rule's peer probabilities
  std::vector<LogitRecord> logits;
  std::vector<FeatureRecord> features;
};

struct TeacherPairObservation {
  std::size_t first = 0;
  std::size_t second = 0;
  MetricSummary overlap;
  MetricSummary spearman;
  MetricSummary kendall_signed;
  MetricSummary kendall_indicator;
};

struct ObservationReport {
  ObservationConfig config;
  std::vector<TeacherObservation> teachers;
  std::vector<TeacherPairObservation> pairs;
  /// Set when a teacher diverged; the report then holds the teachers before it.
  std::optional<std::string> failure;
};

/// Trains one teacher per capacity (all from config.teacher.seed) and
/// measures every teacher and teacher pair on the training set. A diverging
/// teacher ends the run early with `failure` naming it.
ObservationReport run_observation_suite(const ObservationConfig& config);

// ---------------------------------------------------------------------------
// Capacity mismatch: students distilled from a small and a large teacher
// under each softening remedy.

enum class MismatchCell { nokd, ts, ats, isats, fgcr, regt };

std::string to_string(MismatchCell cell);
MismatchCell parse_mismatch_cell(const std::string& name);

struct MismatchConfig {
  GroupTaskSpec task;
  std::vector<std::size_t> small_hidden{32, 8};
  std::vector<std::size_t> large_hidden{512, 8};
  std::vector<std::size_t> student_hidden{16, 8};
  TrainConfig teacher;
  TrainConfig student;
  double tau = 4.0;
  double ats_gap = 1.0;  ///< ATS uses (tau + gap, tau)
  std::vector<double> isats_grid = default_isats_grid();
  double isats_offset = 1.0;
  FgcrOptions fgcr;
  double regt_beta = 1.0;
  std::vector<MismatchCell> cells{MismatchCell::ts, MismatchCell::ats, MismatchCell::isats,
                                  MismatchCell::fgcr, MismatchCell::regt};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
};

struct CellResult {
  std::string teacher;  ///< "none", "small" or "large"
  MismatchCell cell = MismatchCell::nokd;
  std::vector<double> accuracies;  ///< student test accuracy, one per seed
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct SeedTeachers {
  std::uint64_t seed = 0;
  std::string teacher;  ///< "small" or "large"
  double plain_test_accuracy = 0.0;
  double regt_test_accuracy = 0.0;
  double plain_non_gt_std = 0.0;  ///< mean std(q) at tau = 1, training set
  double regt_non_gt_std = 0.0;
};

struct MismatchReport {
  MismatchConfig config;
  std::vector<CellResult> cells;
  std::vector<SeedTeachers> teachers;
  /// Set when a training run diverged; cells then hold the runs finished before it.
  std::optional<std::string> failure;
};

double median(std::vector<double> values);

MismatchReport run_mismatch_suite(const MismatchConfig& config);

/// Looks up a cell by teacher name and kind; throws InputError if absent.
const CellResult& find_cell(const MismatchReport& report, const std::string& teacher,
                            MismatchCell cell);

}  // namespace dkd::lab
