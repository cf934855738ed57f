#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dkd/adjustment.hpp"
#include "dkd/affinity.hpp"
#include "dkd/error.hpp"
#include "dkd/geometry.hpp"
#include "dkd/io/csv.hpp"
#include "dkd/io/manifest.hpp"
#include "dkd/io/report.hpp"
#include "dkd/lab/suites.hpp"
#include "dkd/temperature.hpp"

namespace dkd::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

struct Options {
  std::vector<std::string> logits;
  std::string features;
  std::string policy;
  std::string priors;
  std::string config;
  std::string out_dir;
  std::string kendall_convention = "signed";
  std::size_t k = 5;
  double tau = 4.0;
  std::optional<double> alpha;
  double beta = 0.01;
  std::size_t cap = kDefaultMaxPairsPerBucket;
  std::optional<std::uint64_t> seed;
  bool exclude_gt = false;
};

io::RunManifest start_manifest(const std::string& command) {
  io::RunManifest m;
  m.command = command;
  return m;
}

void finish(const fs::path& dir, const io::RunManifest& manifest, const Json& summary) {
  io::write_json(dir / "summary.json", summary);
  io::write_manifest(dir, manifest);
}

Json with_provenance(const io::RunManifest& manifest, Json body) {
  Json out{{"provenance", manifest.provenance()}};
  for (auto& [key, value] : body.items()) out[key] = value;
  return out;
}

int cmd_analyze(const Options& o, std::ostream& out) {
  auto manifest = start_manifest("analyze");
  const auto a = io::read_logits_csv(o.logits[0]);
  const auto b = io::read_logits_csv(o.logits[1]);
  manifest.add_input(o.logits[0]);
  manifest.add_input(o.logits[1]);
  manifest.config = {{"k", std::to_string(o.k)},
                     {"tau", io::format_real(o.tau)},
                     {"exclude_gt", o.exclude_gt ? "true" : "false"},
                     {"kendall_convention", o.kendall_convention}};
  if (!(o.tau > 0.0)) throw UsageError("--tau must be positive");

  const auto report = analyze_pair(a, b, {o.k, o.exclude_gt});
  const fs::path dir = o.out_dir;
  io::write_affinity_csv(dir / "affinity.csv", report);
  io::write_histogram_csv(dir / "histogram.csv", report.histogram);

  const bool indicator = o.kendall_convention == "indicator";
  const auto& kendall = indicator ? report.kendall_indicator : report.kendall_signed;
  Json body = io::affinity_summary(report);
  body["kendall_convention"] = o.kendall_convention;
  body["kendall"] = io::to_json(kendall);
  body["tau"] = o.tau;
  body["mean_non_gt_std"] = {{"first", lab::mean_non_gt_std(a, o.tau)},
                             {"second", lab::mean_non_gt_std(b, o.tau)}};
  finish(dir, manifest, with_provenance(manifest, body));

  fmt::print(out, "samples {}\noverlap@{} {:.6f}\nspearman {:.6f}\nkendall ({}) {:.6f}\n",
             report.per_sample.size(), o.k, report.overlap.mean, report.spearman.mean,
             o.kendall_convention, kendall.mean);
  return kExitOk;
}

int cmd_scale(const Options& o, std::ostream& out) {
  auto manifest = start_manifest("scale");
  const auto policy = parse_policy(o.policy);
  const auto records = io::read_logits_csv(o.logits[0]);
  manifest.add_input(o.logits[0]);
  manifest.config = {{"policy", format_policy(policy)}};

  std::vector<ClassPrior> priors;
  if (o.alpha) {
    const auto* ts = std::get_if<TsPolicy>(&policy);
    if (ts == nullptr) throw UsageError("--alpha (FGCR fusion) needs a ts:<tau> policy");
    if (!o.priors.empty()) {
      priors = io::read_priors_csv(o.priors);
      manifest.add_input(o.priors);
    } else {
      priors = build_class_priors(records, default_prior_temperature(ts->tau));
    }
    manifest.config["alpha"] = io::format_real(*o.alpha);
    manifest.config["prior_tau0"] = io::format_real(priors.front().tau0);
  }

  std::vector<ProbabilityVector> probs;
  probs.reserve(records.size());
  std::map<double, std::size_t> chosen;
  double gt_total = 0.0;
  double std_total = 0.0;
  for (const auto& r : records) {
    if (o.alpha) {
      if (r.label >= priors.size()) throw InputError(fmt::format("no prior for class {}", r.label));
      probs.push_back(fgcr_fuse(r, priors[r.label], std::get<TsPolicy>(policy).tau, *o.alpha));
    } else {
      probs.push_back(apply_policy(r, policy));
    }
    if (const auto* isats = std::get_if<IsatsPolicy>(&probs.back().policy)) ++chosen[*isats->chosen];
    gt_total += probs.back().probs[r.label];
    std_total += non_gt_std(probs.back().probs, r.label);
  }
  const fs::path dir = o.out_dir;
  io::write_probabilities_csv(dir / "probabilities.csv", records, probs);

  const double n = records.empty() ? 1.0 : static_cast<double>(records.size());
  Json body{{"samples", records.size()},
            {"policy", format_policy(policy)},
            {"mean_gt_probability", gt_total / n},
            {"mean_non_gt_std", std_total / n}};
  if (!chosen.empty()) {
    Json hist = Json::array();
    for (const auto& [tau, count] : chosen) hist.push_back({{"tau_star", tau}, {"count", count}});
    body["tau_star_counts"] = hist;
  }
  finish(dir, manifest, with_provenance(manifest, body));
  fmt::print(out, "samples {}\npolicy {}\nmean p_y {:.6f}\nmean std(q) {:.6f}\n", records.size(),
             format_policy(policy), gt_total / n, std_total / n);
  return kExitOk;
}

int cmd_priors(const Options& o, std::ostream& out) {
  auto manifest = start_manifest("priors");
  const auto records = io::read_logits_csv(o.logits[0]);
  manifest.add_input(o.logits[0]);
  manifest.config = {{"tau0", io::format_real(o.tau)}};
  if (!(o.tau > 0.0)) throw UsageError("--tau must be positive");
  const auto priors = build_class_priors(records, o.tau);
  const fs::path dir = o.out_dir;
  io::write_priors_csv(dir / "priors.csv", priors);
  Json counts = Json::array();
  for (const auto& p : priors) counts.push_back(p.count);
  finish(dir, manifest, with_provenance(manifest, {{"classes", priors.size()}, {"counts", counts}}));
  fmt::print(out, "classes {}\n", priors.size());
  return kExitOk;
}

int cmd_angles(const Options& o, std::ostream& out) {
  auto manifest = start_manifest("angles");
  const auto records = io::read_features_csv(o.features);
  manifest.add_input(o.features);
  const std::uint64_t seed = o.seed.value_or(0);
  manifest.config = {{"cap", std::to_string(o.cap)}, {"seed", std::to_string(seed)}};
  const auto stats = class_angle_stats(records, o.cap, seed);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  {
    std::ofstream table(dir / "angles.csv", std::ios::binary | std::ios::trunc);
    if (!table) throw RunError("cannot write angles.csv");
    table << "bucket,mean_deg,std_deg,pairs_used,pairs_total\n";
    for (const auto& [name, bucket] : {std::pair{"within_class", stats.within},
                                       std::pair{"between_class", stats.between}}) {
      if (!bucket) continue;
      table << name << ',' << io::format_real(bucket->mean) << ',' << io::format_real(bucket->std)
            << ',' << bucket->pairs_used << ',' << bucket->pairs_total << '\n';
    }
  }
  finish(dir, manifest, with_provenance(manifest, {{"samples", records.size()}, {"angles", io::to_json(stats)}}));
  if (stats.within) fmt::print(out, "within {:.4f} deg\n", stats.within->mean);
  if (stats.between) fmt::print(out, "between {:.4f} deg\n", stats.between->mean);
  return kExitOk;
}

int cmd_penalty(const Options& o, std::ostream& out) {
  auto manifest = start_manifest("penalty");
  const auto records = io::read_logits_csv(o.logits[0]);
  manifest.add_input(o.logits[0]);
  manifest.config = {{"beta", io::format_real(o.beta)}};
  if (!(o.beta >= 0.0)) throw UsageError("--beta must be non-negative");
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  double total = 0.0;
  {
    std::ofstream table(dir / "penalty.csv", std::ios::binary | std::ios::trunc);
    if (!table) throw RunError("cannot write penalty.csv");
    table << "sample_id,label,gt_probability,non_gt_std,penalty\n";
    for (const auto& r : records) {
      const auto p = apply_ts(r, 1.0);
      const double value = regt_penalty(p, r.label);
      total += value;
      table << r.sample_id << ',' << r.label << ',' << io::format_real(p.probs[r.label]) << ','
            << io::format_real(non_gt_std(p.probs, r.label)) << ',' << io::format_real(value) << '\n';
    }
  }
  const double mean = records.empty() ? 0.0 : total / static_cast<double>(records.size());
  finish(dir, manifest,
         with_provenance(manifest, {{"samples", records.size()},
                                    {"mean_penalty", mean},
                                    {"beta", o.beta},
                                    {"weighted_penalty", o.beta * mean}}));
  fmt::print(out, "mean penalty {:.6f}\n", mean);
  return kExitOk;
}

Json load_config(const Options& o, io::RunManifest& manifest) {
  if (o.config.empty()) return Json::object();
  manifest.add_input(o.config);
  return io::read_json(o.config);
}

int cmd_observe(const Options& o, std::ostream& out, std::ostream& err) {
  auto manifest = start_manifest("lab observe");
  auto config = io::observation_config_from_json(load_config(o, manifest));
  if (o.seed) {
    config.task.seed = *o.seed;
    config.teacher.seed = *o.seed;
  }
  manifest.config = {{"resolved", io::to_json(config).dump()}};
  const auto report = lab::run_observation_suite(config);
  const fs::path dir = o.out_dir;
  io::write_observation_report(dir, report, manifest);
  io::write_manifest(dir, manifest);
  for (std::size_t i = 0; i < report.teachers.size(); ++i) {
    const auto& t = report.teachers[i];
    fmt::print(out, "teacher {} params {} test_acc {:.4f} std(q) {:.6f} rule_kendall {:.4f}\n", i,
               t.parameter_count, t.test_accuracy, t.mean_non_gt_std, t.rule_kendall);
  }
  for (const auto& p : report.pairs) {
    fmt::print(out, "pair {}-{} spearman {:.4f} kendall {:.4f} overlap {:.4f}\n", p.first, p.second,
               p.spearman.mean, p.kendall_signed.mean, p.overlap.mean);
  }
  if (report.failure) {
    fmt::print(err, "dkd: run error: {} (partial report kept in {})\n", *report.failure, o.out_dir);
    return kExitRun;
  }
  return kExitOk;
}

int cmd_mismatch(const Options& o, std::ostream& out, std::ostream& err) {
  auto manifest = start_manifest("lab mismatch");
  const auto config = io::mismatch_config_from_json(load_config(o, manifest));
  manifest.config = {{"resolved", io::to_json(config).dump()}};
  const auto report = lab::run_mismatch_suite(config);
  const fs::path dir = o.out_dir;
  io::write_mismatch_report(dir, report, manifest);
  io::write_manifest(dir, manifest);
  for (const auto& c : report.cells) {
    fmt::print(out, "{:<5} {:<5} median {:.4f} [{:.4f}, {:.4f}]\n", c.teacher, lab::to_string(c.cell),
               c.median, c.min, c.max);
  }
  if (report.failure) {
    fmt::print(err, "dkd: run error: {} (partial report kept in {})\n", *report.failure, o.out_dir);
    return kExitRun;
  }
  return kExitOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::config:
    case ErrorKind::domain: return kExitUsage;
    case ErrorKind::input:
    case ErrorKind::parse: return kExitParse;
    case ErrorKind::run: return kExitRun;
  }
  return kExitRun;
}

const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return "usage error";
    case ErrorKind::config: return "config error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::input: return "input error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::run: return "run error";
  }
  return "error";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Teacher probability analysis and desk-scale distillation experiments", "dkd"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::kToolVersion);

  const auto out_dir = [&](CLI::App* cmd) {
    cmd->add_option("--out-dir", o.out_dir, "Directory for the report files")->required();
  };

  auto* analyze = app.add_subcommand("analyze", "Rank agreement between two logit files");
  analyze->add_option("--logits", o.logits, "Logits CSV (give twice)")->required()->expected(2);
  analyze->add_option("--k", o.k, "Top-K cutoff for set overlap")->capture_default_str();
  analyze->add_option("--tau", o.tau, "Temperature for std(q)")->capture_default_str();
  analyze->add_flag("--exclude-gt", o.exclude_gt, "Drop the ground-truth class before ranking");
  analyze->add_option("--kendall-convention", o.kendall_convention, "Headline Kendall statistic")
      ->check(CLI::IsMember({"signed", "indicator"}))
      ->capture_default_str();
  out_dir(analyze);

  auto* scale = app.add_subcommand("scale", "Soften logits under a temperature policy");
  scale->add_option("--logits", o.logits, "Logits CSV")->required()->expected(1);
  scale->add_option("--policy", o.policy, std::string(kPolicyGrammar))->required();
  scale->add_option("--alpha", o.alpha, "Fuse with class priors (ts policies only)");
  scale->add_option("--priors", o.priors, "Priors CSV (default: built from --logits at tau-1)");
  out_dir(scale);

  auto* priors = app.add_subcommand("priors", "Per-class mean softened probabilities");
  priors->add_option("--logits", o.logits, "Logits CSV")->required()->expected(1);
  priors->add_option("--tau", o.tau, "Prior temperature tau0")->capture_default_str();
  out_dir(priors);

  auto* angles = app.add_subcommand("angles", "Within/between-class feature angles");
  angles->add_option("--features", o.features, "Features CSV")->required();
  angles->add_option("--cap", o.cap, "Max pairs per bucket")->capture_default_str();
  angles->add_option("--seed", o.seed, "Pair subsampling seed (default 0)");
  out_dir(angles);

  auto* penalty = app.add_subcommand("penalty", "Per-sample p_y - std(q) at temperature 1");
  penalty->add_option("--logits", o.logits, "Logits CSV")->required()->expected(1);
  penalty->add_option("--beta", o.beta, "Penalty weight")->capture_default_str();
  out_dir(penalty);

  auto* lab = app.add_subcommand("lab", "Desk-scale experiments");
  lab->require_subcommand(1);
  auto* observe = lab->add_subcommand("observe", "Capacity observation suite");
  observe->add_option("--config", o.config, "JSON config (defaults when omitted)");
  observe->add_option("--seed", o.seed, "Override task and teacher seeds");
  out_dir(observe);
  auto* mismatch = lab->add_subcommand("mismatch", "Capacity mismatch suite");
  mismatch->add_option("--config", o.config, "JSON config (defaults when omitted)");
  out_dir(mismatch);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << io::kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "dkd: usage error: {}\n", e.what());
    return kExitUsage;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(o, out);
    if (scale->parsed()) return cmd_scale(o, out);
    if (priors->parsed()) return cmd_priors(o, out);
    if (angles->parsed()) return cmd_angles(o, out);
    if (penalty->parsed()) return cmd_penalty(o, out);
    if (observe->parsed()) return cmd_observe(o, out, err);
    if (mismatch->parsed()) return cmd_mismatch(o, out, err);
  } catch (const Error& e) {
    fmt::print(err, "dkd: {}: {}\n", kind_name(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    fmt::print(err, "dkd: run error: {}\n", e.what());
    return kExitRun;
  }
  return kExitUsage;
}

}  // namespace dkd::cli
