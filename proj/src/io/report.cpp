#include "dkd/io/report.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dkd/error.hpp"
#include "dkd/io/csv.hpp"

namespace dkd::io {

Json to_json(const MetricSummary& summary) { return {{"mean", summary.mean}, {"std", summary.std}}; }

namespace {

Json bucket_json(const std::optional<BucketStats>& bucket) {
  if (!bucket) return nullptr;
  return {{"mean_deg", bucket->mean},
          {"std_deg", bucket->std},
          {"pairs_used", bucket->pairs_used},
          {"pairs_total", bucket->pairs_total}};
}

std::string scope_name(RuleScope scope) {
  return scope == RuleScope::with_target ? "with_target" : "peers_only";
}

// Reads known keys into a struct, rejecting keys it does not know.
class Fields {
 public:
  Fields(const Json& j, std::string context) : json_(j), context_(std::move(context)) {
    if (!j.is_object()) throw ConfigError(fmt::format("{}: expected a JSON object", context_));
  }

  template <typename T>
  void read(const char* key, T& target) {
    known_.insert(key);
    if (!json_.contains(key)) return;
    try {
      target = json_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(fmt::format("{}.{}: {}", context_, key, e.what()));
    }
  }

  [[nodiscard]] bool has(const char* key) {
    known_.insert(key);
    return json_.contains(key);
  }
  [[nodiscard]] const Json& at(const char* key) const { return json_.at(key); }

  void finish() const {
    for (const auto& item : json_.items()) {
      if (known_.count(item.key()) == 0) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", context_, item.key()));
      }
    }
  }

 private:
  const Json& json_;
  std::string context_;
  std::set<std::string> known_;
};

}  // namespace

Json to_json(const AngleStats& stats) {
  return {{"within_class", bucket_json(stats.within)}, {"between_class", bucket_json(stats.between)}};
}

Json affinity_summary(const AffinityReport& report) {
  Json hist = Json::array();
  for (std::size_t k = 1; k <= report.histogram.k_max; ++k) {
    hist.push_back({{"k", k}, {"counts", report.histogram.counts[k - 1]}});
  }
  return {{"samples", report.per_sample.size()},
          {"k", report.k},
          {"exclude_gt", report.exclude_gt},
          {"overlap_ratio", to_json(report.overlap)},
          {"spearman", to_json(report.spearman)},
          {"kendall_signed", to_json(report.kendall_signed)},
          {"kendall_indicator", to_json(report.kendall_indicator)},
          {"overlap_histogram", hist}};
}

Json to_json(const lab::GroupTaskSpec& spec) {
  return {{"n_superclasses", spec.n_superclasses},
          {"n_fine_per_super", spec.n_fine_per_super},
          {"input_dim", spec.input_dim},
          {"super_center_scale", spec.super_center_scale},
          {"fine_center_scale", spec.fine_center_scale},
          {"noise_std", spec.noise_std},
          {"n_train_per_class", spec.n_train_per_class},
          {"n_test_per_class", spec.n_test_per_class},
          {"seed", spec.seed}};
}

Json to_json(const lab::TrainConfig& config) {
  return {{"epochs", config.epochs},     {"batch_size", config.batch_size},
          {"learning_rate", config.learning_rate}, {"momentum", config.momentum},
          {"lambda", config.lambda},     {"beta", config.beta},
          {"seed", config.seed}};
}

Json to_json(const lab::ObservationConfig& config) {
  return {{"task", to_json(config.task)},
          {"capacities", config.capacities},
          {"teacher", to_json(config.teacher)},
          {"tau", config.tau},
          {"k", config.k},
          {"exclude_gt", config.exclude_gt},
          {"angle_pair_cap", config.angle_pair_cap},
          {"rule_scope", scope_name(config.rule_scope)}};
}

Json to_json(const lab::MismatchConfig& config) {
  std::vector<std::string> cells;
  for (auto c : config.cells) cells.push_back(lab::to_string(c));
  Json fgcr{{"alpha", config.fgcr.alpha}};
  fgcr["tau0"] = config.fgcr.tau0 ? Json(*config.fgcr.tau0) : Json(nullptr);
  return {{"task", to_json(config.task)},
          {"small_hidden", config.small_hidden},
          {"large_hidden", config.large_hidden},
          {"student_hidden", config.student_hidden},
          {"teacher", to_json(config.teacher)},
          {"student", to_json(config.student)},
          {"tau", config.tau},
          {"ats_gap", config.ats_gap},
          {"isats_grid", config.isats_grid},
          {"isats_offset", config.isats_offset},
          {"fgcr", fgcr},
          {"regt_beta", config.regt_beta},
          {"cells", cells},
          {"seeds", config.seeds}};
}

lab::GroupTaskSpec task_spec_from_json(const Json& j) {
  lab::GroupTaskSpec spec;
  Fields f(j, "task");
  f.read("n_superclasses", spec.n_superclasses);
  f.read("n_fine_per_super", spec.n_fine_per_super);
  f.read("input_dim", spec.input_dim);
  f.read("super_center_scale", spec.super_center_scale);
  f.read("fine_center_scale", spec.fine_center_scale);
  f.read("noise_std", spec.noise_std);
  f.read("n_train_per_class", spec.n_train_per_class);
  f.read("n_test_per_class", spec.n_test_per_class);
  f.read("seed", spec.seed);
  f.finish();
  lab::validate(spec);
  return spec;
}

lab::TrainConfig train_config_from_json(const Json& j) {
  lab::TrainConfig config;
  Fields f(j, "train");
  f.read("epochs", config.epochs);
  f.read("batch_size", config.batch_size);
  f.read("learning_rate", config.learning_rate);
  f.read("momentum", config.momentum);
  f.read("lambda", config.lambda);
  f.read("beta", config.beta);
  f.read("seed", config.seed);
  f.finish();
  lab::validate(config);
  return config;
}

lab::ObservationConfig observation_config_from_json(const Json& j) {
  lab::ObservationConfig config;
  Fields f(j, "observe");
  if (f.has("task")) config.task = task_spec_from_json(f.at("task"));
  if (f.has("teacher")) config.teacher = train_config_from_json(f.at("teacher"));
  f.read("capacities", config.capacities);
  f.read("tau", config.tau);
  f.read("k", config.k);
  f.read("exclude_gt", config.exclude_gt);
  f.read("angle_pair_cap", config.angle_pair_cap);
  std::string scope = scope_name(config.rule_scope);
  f.read("rule_scope", scope);
  if (scope == "with_target") {
    config.rule_scope = RuleScope::with_target;
  } else if (scope == "peers_only") {
    config.rule_scope = RuleScope::peers_only;
  } else {
    throw ConfigError(fmt::format("observe.rule_scope: '{}' (with_target|peers_only)", scope));
  }
  f.finish();
  return config;
}

lab::MismatchConfig mismatch_config_from_json(const Json& j) {
  lab::MismatchConfig config;
  Fields f(j, "mismatch");
  if (f.has("task")) config.task = task_spec_from_json(f.at("task"));
  if (f.has("teacher")) config.teacher = train_config_from_json(f.at("teacher"));
  if (f.has("student")) config.student = train_config_from_json(f.at("student"));
  f.read("small_hidden", config.small_hidden);
  f.read("large_hidden", config.large_hidden);
  f.read("student_hidden", config.student_hidden);
  f.read("tau", config.tau);
  f.read("ats_gap", config.ats_gap);
  f.read("isats_grid", config.isats_grid);
  f.read("isats_offset", config.isats_offset);
  f.read("regt_beta", config.regt_beta);
  f.read("seeds", config.seeds);
  if (f.has("fgcr")) {
    Fields g(f.at("fgcr"), "mismatch.fgcr");
    g.read("alpha", config.fgcr.alpha);
    if (g.has("tau0") && !f.at("fgcr").at("tau0").is_null()) {
      config.fgcr.tau0 = f.at("fgcr").at("tau0").get<double>();
    }
    g.finish();
  }
  if (f.has("cells")) {
    config.cells.clear();
    for (const auto& name : f.at("cells")) {
      config.cells.push_back(lab::parse_mismatch_cell(name.get<std::string>()));
    }
  }
  f.finish();
  validate_grid(config.isats_grid);
  return config;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot open '{}' for reading", path.string()));
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

namespace {

std::ofstream open_table(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RunError(fmt::format("cannot open '{}' for writing", path.string()));
  return out;
}

std::string hidden_label(const std::vector<std::size_t>& hidden) {
  return fmt::format("{}", fmt::join(hidden, "x"));
}

std::string optional_real(const std::optional<BucketStats>& b, double BucketStats::*field) {
  return b ? format_real((*b).*field) : std::string();
}

}  // namespace

void write_observation_report(const std::filesystem::path& dir, const lab::ObservationReport& report,
                              const RunManifest& manifest) {
  {
    auto out = open_table(dir / "teachers.csv");
    out << "index,hidden,parameters,train_accuracy,test_accuracy,mean_non_gt_std,rule_kendall,"
           "rule_non_gt_std\n";
    for (std::size_t i = 0; i < report.teachers.size(); ++i) {
      const auto& t = report.teachers[i];
      out << i << ',' << hidden_label(t.hidden) << ',' << t.parameter_count << ','
          << format_real(t.train_accuracy) << ',' << format_real(t.test_accuracy) << ','
          << format_real(t.mean_non_gt_std) << ',' << format_real(t.rule_kendall) << ','
          << format_real(t.rule_non_gt_std) << '\n';
    }
  }
  {
    auto out = open_table(dir / "angles.csv");
    out << "index,hidden,parameters,within_mean_deg,within_std_deg,between_mean_deg,between_std_deg\n";
    for (std::size_t i = 0; i < report.teachers.size(); ++i) {
      const auto& t = report.teachers[i];
      out << i << ',' << hidden_label(t.hidden) << ',' << t.parameter_count << ','
          << optional_real(t.angles.within, &BucketStats::mean) << ','
          << optional_real(t.angles.within, &BucketStats::std) << ','
          << optional_real(t.angles.between, &BucketStats::mean) << ','
          << optional_real(t.angles.between, &BucketStats::std) << '\n';
    }
  }
  {
    auto out = open_table(dir / "pairs.csv");
    out << "first,second,overlap_mean,spearman_mean,kendall_signed_mean,kendall_indicator_mean\n";
    for (const auto& p : report.pairs) {
      out << p.first << ',' << p.second << ',' << format_real(p.overlap.mean) << ','
          << format_real(p.spearman.mean) << ',' << format_real(p.kendall_signed.mean) << ','
          << format_real(p.kendall_indicator.mean) << '\n';
    }
  }
  for (std::size_t i = 0; i < report.teachers.size(); ++i) {
    write_logits_csv(dir / "exports" / fmt::format("teacher_{}_logits.csv", i),
                     report.teachers[i].logits);
    write_features_csv(dir / "exports" / fmt::format("teacher_{}_features.csv", i),
                       report.teachers[i].features);
  }

  Json teachers = Json::array();
  for (const auto& t : report.teachers) {
    teachers.push_back({{"hidden", t.hidden},
                        {"parameters", t.parameter_count},
                        {"train_accuracy", t.train_accuracy},
                        {"test_accuracy", t.test_accuracy},
                        {"mean_non_gt_std", t.mean_non_gt_std},
                        {"rule_kendall", t.rule_kendall},
                        {"rule_non_gt_std", t.rule_non_gt_std},
                        {"angles", to_json(t.angles)}});
  }
  Json pairs = Json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"first", p.first},
                     {"second", p.second},
                     {"overlap_ratio", to_json(p.overlap)},
                     {"spearman", to_json(p.spearman)},
                     {"kendall_signed", to_json(p.kendall_signed)},
                     {"kendall_indicator", to_json(p.kendall_indicator)}});
  }
  write_json(dir / "summary.json", {{"provenance", manifest.provenance()},
                                    {"config", to_json(report.config)},
                                    {"teachers", teachers},
                                    {"pairs", pairs},
                                    {"failure", report.failure ? Json(*report.failure) : Json(nullptr)}});
}

void write_mismatch_report(const std::filesystem::path& dir, const lab::MismatchReport& report,
                           const RunManifest& manifest) {
  {
    auto out = open_table(dir / "cells.csv");
    out << "teacher,cell,median,min,max";
    for (auto seed : report.config.seeds) out << ",seed_" << seed;
    out << '\n';
    for (const auto& c : report.cells) {
      out << c.teacher << ',' << lab::to_string(c.cell) << ',' << format_real(c.median) << ','
          << format_real(c.min) << ',' << format_real(c.max);
      for (double a : c.accuracies) out << ',' << format_real(a);
      // Runs cut short by a divergence leave trailing seeds empty.
      for (std::size_t i = c.accuracies.size(); i < report.config.seeds.size(); ++i) out << ',';
      out << '\n';
    }
  }
  {
    auto out = open_table(dir / "teachers.csv");
    out << "seed,teacher,plain_test_accuracy,regt_test_accuracy,plain_non_gt_std,regt_non_gt_std\n";
    for (const auto& t : report.teachers) {
      out << t.seed << ',' << t.teacher << ',' << format_real(t.plain_test_accuracy) << ','
          << format_real(t.regt_test_accuracy) << ',' << format_real(t.plain_non_gt_std) << ','
          << format_real(t.regt_non_gt_std) << '\n';
    }
  }
  Json cells = Json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"teacher", c.teacher},
                     {"cell", lab::to_string(c.cell)},
                     {"median", c.median},
                     {"min", c.min},
                     {"max", c.max}});
  }
  write_json(dir / "summary.json", {{"provenance", manifest.provenance()},
                                    {"config", to_json(report.config)},
                                    {"cells", cells},
                                    {"failure", report.failure ? Json(*report.failure) : Json(nullptr)}});
}

}  // namespace dkd::io
