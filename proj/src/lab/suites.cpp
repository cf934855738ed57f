#include "dkd/lab/suites.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dkd/error.hpp"
#include "dkd/temperature.hpp"

namespace dkd::lab {

std::vector<LogitRecord> logit_records(const MlpModel& model, const Dataset& data) {
  const auto cache = forward_batch(model, data.inputs);
  const auto& logits = cache.logits();
  std::vector<LogitRecord> out;
  out.reserve(data.size());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const auto i = static_cast<std::size_t>(j);
    out.push_back({data.ids[i], data.labels[i],
                   Vector(logits.col(j).data(), logits.col(j).data() + logits.rows())});
  }
  return out;
}

std::vector<FeatureRecord> feature_records(const MlpModel& model, const Dataset& data) {
  const auto cache = forward_batch(model, data.inputs);
  const auto& features = cache.features();
  std::vector<FeatureRecord> out;
  out.reserve(data.size());
  for (Eigen::Index j = 0; j < features.cols(); ++j) {
    const auto i = static_cast<std::size_t>(j);
    out.push_back({data.ids[i], data.labels[i],
                   Vector(features.col(j).data(), features.col(j).data() + features.rows())});
  }
  return out;
}

double mean_non_gt_std(std::span<const LogitRecord> records, double tau) {
  if (records.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : records) total += non_gt_std(apply_ts(r, tau).probs, r.label);
  return total / static_cast<double>(records.size());
}

namespace {

TeacherObservation observe_teacher(const GroupTask& task, const std::vector<std::size_t>& hidden,
                                   const ObservationConfig& config) {
  const auto trained = train_teacher(task, hidden, config.teacher);
  TeacherObservation obs;
  obs.hidden = hidden;
  obs.parameter_count = trained.model.parameter_count();
  obs.train_accuracy = trained.train_accuracy;
  obs.test_accuracy = trained.test_accuracy;
  obs.logits = logit_records(trained.model, task.train);
  obs.features = feature_records(trained.model, task.train);
  obs.mean_non_gt_std = mean_non_gt_std(obs.logits, config.tau);

  // Zero-norm features (possible with a dead network) cannot define an angle.
  std::vector<FeatureRecord> usable;
  for (const auto& f : obs.features) {
    if (std::any_of(f.features.begin(), f.features.end(), [](double v) { return v != 0.0; })) {
      usable.push_back(f);
    }
  }
  if (usable.size() >= 2) {
    obs.angles = class_angle_stats(usable, config.angle_pair_cap, config.teacher.seed);
  }

  double kendall_sum = 0.0;
  double std_sum = 0.0;
  for (const auto& record : obs.logits) {
    const auto rc = rule_consistency(record, apply_ts(record, config.tau), task.rules[record.label],
                                     config.rule_scope);
    kendall_sum += rc.kendall;
    std_sum += rc.non_gt_std;
  }
  const auto n = static_cast<double>(obs.logits.size());
  obs.rule_kendall = kendall_sum / n;
  obs.rule_non_gt_std = std_sum / n;
  return obs;
}

}  // namespace

ObservationReport run_observation_suite(const ObservationConfig& config) {
  if (config.capacities.empty()) throw ConfigError("observation suite needs at least one capacity");
  if (!(config.tau > 0.0)) throw ConfigError("observation temperature must be positive");
  const auto task = generate_group_task(config.task);
  if (config.k == 0 || config.k > task.spec.num_classes() - (config.exclude_gt ? 1 : 0)) {
    throw ConfigError(fmt::format("overlap cutoff K={} is out of range", config.k));
  }
  ObservationReport report;
  report.config = config;
  for (std::size_t i = 0; i < config.capacities.size(); ++i) {
    const auto& hidden = config.capacities[i];
    try {
      report.teachers.push_back(observe_teacher(task, hidden, config));
    } catch (const RunError& e) {
      report.failure = fmt::format("teacher {} ({}): {}", i, fmt::join(hidden, "x"), e.what());
      break;
    }
  }
  for (std::size_t a = 0; a < report.teachers.size(); ++a) {
    for (std::size_t b = a + 1; b < report.teachers.size(); ++b) {
      const auto affinity = analyze_pair(report.teachers[a].logits, report.teachers[b].logits,
                                         {config.k, config.exclude_gt});
      report.pairs.push_back({a, b, affinity.overlap, affinity.spearman, affinity.kendall_signed,
                              affinity.kendall_indicator});
    }
  }
  return report;
}

std::string to_string(MismatchCell cell) {
  switch (cell) {
    case MismatchCell::nokd: return "nokd";
    case MismatchCell::ts: return "ts";
    case MismatchCell::ats: return "ats";
    case MismatchCell::isats: return "isats";
    case MismatchCell::fgcr: return "fgcr";
    case MismatchCell::regt: return "regt";
  }
  return "unknown";
}

MismatchCell parse_mismatch_cell(const std::string& name) {
  for (auto cell : {MismatchCell::nokd, MismatchCell::ts, MismatchCell::ats, MismatchCell::isats,
                    MismatchCell::fgcr, MismatchCell::regt}) {
    if (to_string(cell) == name) return cell;
  }
  throw ConfigError(fmt::format("unknown mismatch cell '{}' (nokd|ts|ats|isats|fgcr|regt)", name));
}

double median(std::vector<double> values) {
  if (values.empty()) throw InputError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

double student_accuracy(const MlpModel& teacher, const GroupTask& task, const MismatchConfig& cfg,
                        MismatchCell cell) {
  std::optional<FgcrOptions> fgcr;
  TemperaturePolicy policy = TsPolicy{cfg.tau};
  switch (cell) {
    case MismatchCell::ats: policy = AtsPolicy{cfg.tau + cfg.ats_gap, cfg.tau}; break;
    case MismatchCell::isats: policy = IsatsPolicy{cfg.isats_grid, cfg.isats_offset, {}}; break;
    case MismatchCell::fgcr: fgcr = cfg.fgcr; break;
    default: break;
  }
  return distill(teacher, cfg.student_hidden, task, cfg.student, policy, fgcr)
      .student.test_accuracy;
}

}  // namespace

MismatchReport run_mismatch_suite(const MismatchConfig& config) {
  if (config.seeds.size() < 3) {
    throw ConfigError(fmt::format("mismatch suite needs at least 3 seeds, got {}", config.seeds.size()));
  }
  std::size_t small_params = 0;
  std::size_t large_params = 0;
  for (std::size_t w : config.small_hidden) small_params += w;
  for (std::size_t w : config.large_hidden) large_params += w;
  if (small_params >= large_params) {
    throw ConfigError("the small teacher must be narrower than the large teacher");
  }
  MismatchReport report;
  report.config = config;

  std::map<std::pair<std::string, MismatchCell>, std::vector<double>> results;
  const std::vector<std::pair<std::string, std::vector<std::size_t>>> teacher_sizes{
      {"small", config.small_hidden}, {"large", config.large_hidden}};
  const bool wants_regt =
      std::find(config.cells.begin(), config.cells.end(), MismatchCell::regt) != config.cells.end();

  std::string current;
  try {
    for (std::uint64_t seed : config.seeds) {
      auto spec = config.task;
      spec.seed = seed;
      const auto task = generate_group_task(spec);
      auto teacher_cfg = config.teacher;
      teacher_cfg.seed = seed;
      auto student_cfg = config.student;
      student_cfg.seed = seed;
      MismatchConfig seeded = config;
      seeded.student = student_cfg;

      current = fmt::format("seed {} nokd student", seed);
      results[{"none", MismatchCell::nokd}].push_back(
          train_plain(task, config.student_hidden, student_cfg).test_accuracy);

      for (const auto& [name, hidden] : teacher_sizes) {
        current = fmt::format("seed {} {} teacher", seed, name);
        const auto plain = train_teacher(task, hidden, teacher_cfg);
        SeedTeachers stats;
        stats.seed = seed;
        stats.teacher = name;
        stats.plain_test_accuracy = plain.test_accuracy;
        stats.plain_non_gt_std = mean_non_gt_std(logit_records(plain.model, task.train), 1.0);
        for (auto cell : config.cells) {
          if (cell == MismatchCell::nokd || cell == MismatchCell::regt) continue;
          current = fmt::format("seed {} {}/{} student", seed, name, to_string(cell));
          results[{name, cell}].push_back(student_accuracy(plain.model, task, seeded, cell));
        }
        if (wants_regt) {
          current = fmt::format("seed {} {} RegT teacher", seed, name);
          const auto regt = train_teacher(task, hidden, teacher_cfg, config.regt_beta);
          stats.regt_test_accuracy = regt.test_accuracy;
          stats.regt_non_gt_std = mean_non_gt_std(logit_records(regt.model, task.train), 1.0);
          current = fmt::format("seed {} {}/regt student", seed, name);
          results[{name, MismatchCell::regt}].push_back(
              student_accuracy(regt.model, task, seeded, MismatchCell::ts));
        }
        report.teachers.push_back(stats);
      }
    }
  } catch (const RunError& e) {
    report.failure = fmt::format("{}: {}", current, e.what());
  }

  const auto emit = [&](const std::string& teacher, MismatchCell cell) {
    const auto it = results.find({teacher, cell});
    if (it == results.end()) return;
    CellResult row;
    row.teacher = teacher;
    row.cell = cell;
    row.accuracies = it->second;
    row.median = median(row.accuracies);
    row.min = *std::min_element(row.accuracies.begin(), row.accuracies.end());
    row.max = *std::max_element(row.accuracies.begin(), row.accuracies.end());
    report.cells.push_back(std::move(row));
  };
  emit("none", MismatchCell::nokd);
  for (const auto& [name, hidden] : teacher_sizes) {
    for (auto cell : config.cells) emit(name, cell);
  }
  return report;
}

const CellResult& find_cell(const MismatchReport& report, const std::string& teacher,
                            MismatchCell cell) {
  for (const auto& row : report.cells) {
    if (row.teacher == teacher && row.cell == cell) return row;
  }
  throw InputError(fmt::format("no mismatch cell {}/{}", teacher, to_string(cell)));
}

}  // namespace dkd::lab
