#include "dkd/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dkd/error.hpp"

namespace dkd {

namespace {

void require_same_length(std::span<const double> f1, std::span<const double> f2, const char* op) {
  if (f1.size() != f2.size()) {
    throw InputError(fmt::format("{}: vectors differ in length ({} vs {})", op, f1.size(), f2.size()));
  }
}

int sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k) {
  if (k == 0 || k > values.size()) {
    throw ConfigError(fmt::format("top-K cutoff {} must lie in [1, {}]", k, values.size()));
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return values[a] > values[b] || (values[a] == values[b] && a < b);
                    });
  order.resize(k);
  return order;
}

SetOverlap set_overlap(std::span<const double> f1, std::span<const double> f2, std::size_t k) {
  require_same_length(f1, f2, "set_overlap");
  auto a = top_k_indices(f1, k);
  auto b = top_k_indices(f2, k);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return {static_cast<double>(common.size()) / static_cast<double>(k), common.size()};
}

std::vector<double> ascending_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]] = static_cast<double>(pos);
  return ranks;
}

double spearman(std::span<const double> f1, std::span<const double> f2) {
  require_same_length(f1, f2, "spearman");
  if (f1.size() < 2) throw DomainError("spearman: rank variance is zero for fewer than 2 classes");
  const auto r1 = ascending_ranks(f1);
  const auto r2 = ascending_ranks(f2);
  const double n = static_cast<double>(r1.size());
  // Both rank vectors are permutations of 0..n-1 and share the same mean.
  const double mean = (n - 1.0) / 2.0;
  double cov = 0.0;
  double var1 = 0.0;
  double var2 = 0.0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    const double d1 = r1[i] - mean;
    const double d2 = r2[i] - mean;
    cov += d1 * d2;
    var1 += d1 * d1;
    var2 += d2 * d2;
  }
  return cov / std::sqrt(var1 * var2);
}

double kendall(std::span<const double> f1, std::span<const double> f2,
               KendallConvention convention) {
  require_same_length(f1, f2, "kendall");
  const std::size_t n = f1.size();
  if (n < 2) throw DomainError("kendall: need at least 2 classes");
  long long total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int s1 = sign(f1[i] - f1[j]);
      const int s2 = sign(f2[i] - f2[j]);
      if (convention == KendallConvention::signed_pairs) {
        total += s1 * s2;
      } else {
        total += (s1 > 0 && s2 > 0) ? 1 : 0;
      }
    }
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(total) / pairs;
}

void validate(const AffinityRule& rule, std::size_t num_classes) {
  if (rule.target >= num_classes) {
    throw InputError(fmt::format("rule target {} out of range [0, {})", rule.target, num_classes));
  }
  if (rule.ordered_peers.empty()) throw InputError("rule has no peers");
  std::vector<std::size_t> seen;
  for (std::size_t peer : rule.ordered_peers) {
    if (peer >= num_classes) {
      throw InputError(fmt::format("rule peer {} out of range [0, {})", peer, num_classes));
    }
    if (peer == rule.target) throw InputError("rule lists its target among the peers");
    if (std::find(seen.begin(), seen.end(), peer) != seen.end()) {
      throw InputError(fmt::format("rule lists peer {} twice", peer));
    }
    seen.push_back(peer);
  }
}

RuleConsistency rule_consistency(const LogitRecord& record, const ProbabilityVector& probs,
                                 const AffinityRule& rule, RuleScope scope) {
  validate(record);
  validate(rule, record.num_classes());
  if (record.label != rule.target) {
    throw InputError(fmt::format("sample '{}' has label {} but the rule targets class {}",
                                 record.sample_id, record.label, rule.target));
  }
  if (probs.probs.size() != record.num_classes()) {
    throw InputError("rule_consistency: probability vector length does not match the logits");
  }
  std::vector<std::size_t> classes;
  if (scope == RuleScope::with_target) classes.push_back(rule.target);
  classes.insert(classes.end(), rule.ordered_peers.begin(), rule.ordered_peers.end());

  Vector expected(classes.size());
  Vector observed(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    expected[i] = static_cast<double>(classes.size() - i);
    observed[i] = probs.probs[classes[i]];
  }
  Vector peer_probs;
  for (std::size_t peer : rule.ordered_peers) peer_probs.push_back(probs.probs[peer]);

  RuleConsistency out;
  out.non_gt_std = dispersion(peer_probs).std;
  // A single peer leaves no pair to compare.
  out.kendall = classes.size() < 2 ? 1.0 : kendall(expected, observed);
  return out;
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  const auto d = dispersion(values);
  double mean = 0.0;
  for (double v : values) mean += v;
  return {mean / static_cast<double>(values.size()), d.std};
}

void check_aligned(std::span<const LogitRecord> a, std::span<const LogitRecord> b) {
  if (a.size() != b.size()) {
    throw InputError(fmt::format("collections differ in size ({} vs {} samples)", a.size(), b.size()));
  }
  std::vector<std::string> offenders;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].sample_id != b[i].sample_id || a[i].label != b[i].label ||
        a[i].num_classes() != b[i].num_classes()) {
      ++count;
      if (offenders.size() < 5) {
        offenders.push_back(fmt::format("row {}: '{}'/{} vs '{}'/{}", i + 1, a[i].sample_id,
                                        a[i].label, b[i].sample_id, b[i].label));
      }
    }
  }
  if (count > 0) {
    throw InputError(fmt::format("{} misaligned samples (id/label/class count); first: {}", count,
                                 fmt::join(offenders, "; ")));
  }
}

namespace {

Vector metric_view(const LogitRecord& record, bool exclude_gt) {
  return exclude_gt ? drop_index(record.logits, record.label) : record.logits;
}

}  // namespace

OverlapHistogram overlap_histogram(std::span<const LogitRecord> a, std::span<const LogitRecord> b,
                                   std::size_t k_max, bool exclude_gt) {
  check_aligned(a, b);
  OverlapHistogram hist;
  hist.k_max = k_max;
  hist.counts.resize(k_max);
  for (std::size_t k = 1; k <= k_max; ++k) hist.counts[k - 1].assign(k + 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    validate(a[i]);
    validate(b[i]);
    const auto fa = metric_view(a[i], exclude_gt);
    const auto fb = metric_view(b[i], exclude_gt);
    for (std::size_t k = 1; k <= k_max; ++k) {
      ++hist.counts[k - 1][set_overlap(fa, fb, k).intersection];
    }
  }
  return hist;
}

AffinityReport analyze_pair(std::span<const LogitRecord> a, std::span<const LogitRecord> b,
                            const AffinityOptions& options) {
  check_aligned(a, b);
  AffinityReport report;
  report.k = options.k;
  report.exclude_gt = options.exclude_gt;
  report.per_sample.reserve(a.size());
  Vector overlap, rho, tau_signed, tau_indicator;
  for (std::size_t i = 0; i < a.size(); ++i) {
    validate(a[i]);
    validate(b[i]);
    const auto fa = metric_view(a[i], options.exclude_gt);
    const auto fb = metric_view(b[i], options.exclude_gt);
    PairMetrics row;
    row.sample_id = a[i].sample_id;
    const auto so = set_overlap(fa, fb, options.k);
    row.overlap_ratio = so.ratio;
    row.intersection = so.intersection;
    row.spearman = spearman(fa, fb);
    row.kendall_signed = kendall(fa, fb, KendallConvention::signed_pairs);
    row.kendall_indicator = kendall(fa, fb, KendallConvention::indicator);
    overlap.push_back(row.overlap_ratio);
    rho.push_back(row.spearman);
    tau_signed.push_back(row.kendall_signed);
    tau_indicator.push_back(row.kendall_indicator);
    report.per_sample.push_back(std::move(row));
  }
  report.overlap = summarize(overlap);
  report.spearman = summarize(rho);
  report.kendall_signed = summarize(tau_signed);
  report.kendall_indicator = summarize(tau_indicator);
  report.histogram = overlap_histogram(a, b, options.k, options.exclude_gt);
  return report;
}

}  // namespace dkd
