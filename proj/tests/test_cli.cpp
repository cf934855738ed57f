#include "cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dkd/adjustment.hpp"
#include "dkd/geometry.hpp"
#include "dkd/io/csv.hpp"
#include "dkd/io/manifest.hpp"
#include "dkd/io/report.hpp"
#include "dkd/temperature.hpp"
#include "support/oracles.hpp"

using namespace dkd;
namespace fs = std::filesystem;

namespace {

const fs::path kData = DKD_TEST_DATA_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dkd_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Data rows of a simple CSV (no quoting), header dropped.
std::vector<std::vector<std::string>> rows_of(const fs::path& path) {
  std::istringstream text(slurp(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(text, line);
  while (std::getline(text, line)) {
    std::vector<std::string> cells;
    std::istringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

std::string logits_a() { return (kData / "logits_a.csv").string(); }
std::string logits_b() { return (kData / "logits_b.csv").string(); }

}  // namespace

TEST(cli_analyze, self_comparison_is_perfect_up_to_ties) {
  const auto dir = scratch("self");
  const auto r = run_cli({"analyze", "--logits", logits_a(), "--logits", logits_a(), "--k", "3",
                          "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = io::read_json(dir / "summary.json");
  EXPECT_EQ(summary["overlap_ratio"]["mean"], 1.0);
  EXPECT_EQ(summary["spearman"]["mean"], 1.0);
  // Tied logits (s3, s4) are neither concordant nor discordant, so self-Kendall dips below 1.
  const auto records = io::read_logits_csv(logits_a());
  double kendall = 0.0;
  for (const auto& r : records) kendall += oracle::brute_kendall(r.logits, r.logits);
  kendall /= static_cast<double>(records.size());
  EXPECT_LT(kendall, 1.0);
  EXPECT_NEAR(summary["kendall"]["mean"].get<double>(), kendall, 1e-12);
  EXPECT_EQ(summary["kendall_signed"]["mean"], summary["kendall"]["mean"]);
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(cli_analyze, rows_match_brute_force) {
  const auto dir = scratch("oracle");
  const auto r = run_cli({"analyze", "--logits", logits_a(), "--logits", logits_b(), "--k", "2",
                          "--kendall-convention", "indicator", "--out-dir", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto a = io::read_logits_csv(logits_a());
  const auto b = io::read_logits_csv(logits_b());
  const auto rows = rows_of(dir / "affinity.csv");
  ASSERT_EQ(rows.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(rows[i][0], a[i].sample_id);
    EXPECT_EQ(std::stoul(rows[i][2]), oracle::brute_overlap(a[i].logits, b[i].logits, 2));
    EXPECT_NEAR(std::stod(rows[i][3]), oracle::brute_spearman(a[i].logits, b[i].logits), 1e-12);
    EXPECT_NEAR(std::stod(rows[i][4]), oracle::brute_kendall(a[i].logits, b[i].logits), 1e-12);
  }
  const auto summary = io::read_json(dir / "summary.json");
  EXPECT_EQ(summary["kendall_convention"], "indicator");
  EXPECT_EQ(summary["kendall"]["mean"], summary["kendall_indicator"]["mean"]);
}

TEST(cli_errors, exit_codes_follow_the_failure_kind) {
  const auto dir = scratch("errors").string();
  const auto missing = run_cli({"scale", "--logits", (kData / "missing_column.csv").string(),
                                "--policy", "ts:2", "--out-dir", dir});
  EXPECT_EQ(missing.code, cli::kExitParse);
  EXPECT_NE(missing.err.find("missing_column.csv:3"), std::string::npos) << missing.err;

  const auto policy = run_cli({"scale", "--logits", logits_a(), "--policy", "warm:2", "--out-dir", dir});
  EXPECT_EQ(policy.code, cli::kExitUsage);
  EXPECT_NE(policy.err.find(std::string(kPolicyGrammar)), std::string::npos) << policy.err;

  EXPECT_EQ(run_cli({"scale", "--logits", logits_a(), "--out-dir", dir}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"analyze", "--logits", logits_a(), "--out-dir", dir}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"scale", "--logits", logits_a(), "--policy", "ats:3,2", "--alpha", "0.5",
                     "--out-dir", dir})
                .code,
            cli::kExitUsage);
  EXPECT_EQ(run_cli({"scale", "--logits", (kData / "nope.csv").string(), "--policy", "ts:2",
                     "--out-dir", dir})
                .code,
            cli::kExitParse);

  const auto help = run_cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("analyze"), std::string::npos);
}

TEST(cli_scale, equal_ats_temperatures_reproduce_ts_bytes) {
  const auto ts = scratch("ts");
  const auto ats = scratch("ats");
  ASSERT_EQ(run_cli({"scale", "--logits", logits_a(), "--policy", "ts:3.5", "--out-dir", ts.string()}).code, 0);
  ASSERT_EQ(run_cli({"scale", "--logits", logits_a(), "--policy", "ats:3.5,3.5", "--out-dir", ats.string()}).code, 0);
  EXPECT_EQ(slurp(ts / "probabilities.csv"), slurp(ats / "probabilities.csv"));
}

TEST(cli_scale, isats_tau_star_is_the_grid_argmax) {
  const auto dir = scratch("isats");
  ASSERT_EQ(run_cli({"scale", "--logits", logits_a(), "--policy", "isats:1,2,3,4,5,6,8",
                     "--out-dir", dir.string()})
                .code,
            0);
  const auto records = io::read_logits_csv(logits_a());
  const auto rows = rows_of(dir / "probabilities.csv");
  ASSERT_EQ(rows.size(), records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    double best_tau = 0.0;
    double best = -1.0;
    for (double tau : {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0}) {
      auto q = oracle::naive_softmax(records[i].logits, tau);
      q.erase(q.begin() + static_cast<std::ptrdiff_t>(records[i].label));
      const double v = oracle::naive_variance(q);
      if (v > best) {
        best = v;
        best_tau = tau;
      }
    }
    EXPECT_EQ(std::stod(rows[i].back()), best_tau) << records[i].sample_id;
    // Default offset 1: gt at tau*+1, the rest at tau*.
    std::vector<double> taus(records[i].logits.size(), best_tau);
    taus[records[i].label] = best_tau + 1.0;
    const auto expected = oracle::naive_softmax(records[i].logits, taus);
    for (std::size_t c = 0; c < expected.size(); ++c) {
      EXPECT_NEAR(std::stod(rows[i][2 + c]), expected[c], 1e-12);
    }
  }
}

TEST(cli_scale, low_temperature_is_nearly_one_hot) {
  const auto dir = scratch("cold");
  ASSERT_EQ(run_cli({"scale", "--logits", logits_a(), "--policy", "ts:0.05", "--out-dir", dir.string()}).code, 0);
  const auto records = io::read_logits_csv(logits_a());
  const auto rows = rows_of(dir / "probabilities.csv");
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_GT(std::stod(rows[i][2 + argmax(records[i].logits)]), 1.0 - 1e-6);
  }
}

TEST(cli_scale, fgcr_matches_the_fusion_and_the_priors_file) {
  const auto fused = scratch("fgcr");
  ASSERT_EQ(run_cli({"scale", "--logits", logits_a(), "--policy", "ts:3", "--alpha", "0.4",
                     "--out-dir", fused.string()})
                .code,
            0);
  const auto records = io::read_logits_csv(logits_a());
  const auto priors = build_class_priors(records, 2.0);
  const auto rows = rows_of(fused / "probabilities.csv");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto p = fgcr_fuse(records[i], priors[records[i].label], 3.0, 0.4);
    for (std::size_t c = 0; c < p.probs.size(); ++c) EXPECT_EQ(std::stod(rows[i][2 + c]), p.probs[c]);
  }

  const auto prior_dir = scratch("priors");
  ASSERT_EQ(run_cli({"priors", "--logits", logits_a(), "--tau", "2", "--out-dir", prior_dir.string()}).code, 0);
  const auto explicit_dir = scratch("fgcr_explicit");
  ASSERT_EQ(run_cli({"scale", "--logits", logits_a(), "--policy", "ts:3", "--alpha", "0.4", "--priors",
                     (prior_dir / "priors.csv").string(), "--out-dir", explicit_dir.string()})
                .code,
            0);
  EXPECT_EQ(slurp(fused / "probabilities.csv"), slurp(explicit_dir / "probabilities.csv"));
}

TEST(cli_runs, reruns_are_byte_identical_apart_from_the_manifest) {
  const std::vector<std::vector<std::string>> commands{
      {"analyze", "--logits", logits_a(), "--logits", logits_b()},
      {"scale", "--logits", logits_a(), "--policy", "isats:1,2,4;+2"},
      {"angles", "--features", (kData / "features.csv").string(), "--cap", "3"},
      {"penalty", "--logits", logits_a(), "--beta", "0.5"}};
  for (const auto& command : commands) {
    const auto first = scratch("rerun_1");
    const auto second = scratch("rerun_2");
    auto a = command;
    a.insert(a.end(), {"--out-dir", first.string()});
    auto b = command;
    b.insert(b.end(), {"--out-dir", second.string()});
    ASSERT_EQ(run_cli(a).code, 0) << command[0];
    ASSERT_EQ(run_cli(b).code, 0) << command[0];
    for (const auto& entry : fs::directory_iterator(first)) {
      const auto name = entry.path().filename();
      if (name == "manifest.json") continue;
      EXPECT_EQ(slurp(entry.path()), slurp(second / name)) << command[0] << " " << name;
    }
  }
}

TEST(cli_angles, summary_matches_the_module) {
  const auto dir = scratch("angles");
  ASSERT_EQ(run_cli({"angles", "--features", (kData / "features.csv").string(), "--out-dir", dir.string()}).code, 0);
  const auto stats = class_angle_stats(io::read_features_csv(kData / "features.csv"));
  const auto rows = rows_of(dir / "angles.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][0], "within_class");
  EXPECT_EQ(std::stod(rows[0][1]), stats.within->mean);
  EXPECT_EQ(std::stoul(rows[0][4]), 4u);  // 3 pairs in class 0, 1 in class 1
  EXPECT_EQ(std::stod(rows[1][1]), stats.between->mean);
  EXPECT_EQ(std::stoul(rows[1][4]), 11u);
}

TEST(cli_penalty, rows_match_the_module) {
  const auto dir = scratch("penalty");
  ASSERT_EQ(run_cli({"penalty", "--logits", logits_a(), "--out-dir", dir.string()}).code, 0);
  const auto records = io::read_logits_csv(logits_a());
  const auto rows = rows_of(dir / "penalty.csv");
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(std::stod(rows[i][4]), regt_penalty(apply_ts(records[i], 1.0), records[i].label));
  }
}

TEST(cli_lab, observe_with_one_capacity) {
  const auto dir = scratch("observe");
  write_text(dir / "in" / "observe.json",
             R"({"task": {"n_train_per_class": 20, "n_test_per_class": 10},
                 "teacher": {"epochs": 2}, "capacities": [[16, 8]]})");
  const auto r = run_cli({"lab", "observe", "--config", (dir / "in" / "observe.json").string(),
                          "--seed", "3", "--out-dir", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(rows_of(dir / "out" / "teachers.csv").size(), 1u);
  const auto summary = io::read_json(dir / "out" / "summary.json");
  EXPECT_TRUE(summary["pairs"].empty());
  EXPECT_TRUE(summary["failure"].is_null());
  EXPECT_EQ(summary["config"]["task"]["seed"], 3);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
}

TEST(cli_lab, zero_lambda_mismatch_cells_equal_nokd) {
  const auto dir = scratch("mismatch");
  write_text(dir / "in" / "mismatch.json",
             R"({"task": {"n_train_per_class": 20, "n_test_per_class": 10},
                 "teacher": {"epochs": 2}, "student": {"epochs": 2, "lambda": 0.0},
                 "small_hidden": [16, 8], "large_hidden": [32, 8], "student_hidden": [8, 8],
                 "seeds": [0, 1, 2]})");
  const auto r = run_cli({"lab", "mismatch", "--config", (dir / "in" / "mismatch.json").string(),
                          "--out-dir", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = rows_of(dir / "out" / "cells.csv");
  ASSERT_EQ(rows.size(), 11u);
  const std::vector<std::string> nokd(rows[0].begin() + 5, rows[0].end());
  for (const auto& row : rows) {
    EXPECT_EQ(std::vector<std::string>(row.begin() + 5, row.end()), nokd) << row[0] << " " << row[1];
  }
}

TEST(cli_lab, bad_configs_are_usage_errors) {
  const auto dir = scratch("badconfig");
  write_text(dir / "typo.json", R"({"capacitys": [[8, 4]]})");
  const auto r = run_cli({"lab", "observe", "--config", (dir / "typo.json").string(), "--out-dir",
                          (dir / "out").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("capacitys"), std::string::npos) << r.err;
  write_text(dir / "few.json", R"({"seeds": [0, 1]})");
  EXPECT_EQ(run_cli({"lab", "mismatch", "--config", (dir / "few.json").string(), "--out-dir",
                     (dir / "out").string()})
                .code,
            cli::kExitUsage);
  write_text(dir / "broken.json", "{");
  EXPECT_EQ(run_cli({"lab", "mismatch", "--config", (dir / "broken.json").string(), "--out-dir",
                     (dir / "out").string()})
                .code,
            cli::kExitParse);
}
