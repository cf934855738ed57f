#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dkd/probability.hpp"

namespace dkd {

// Rank agreement between two score vectors over the same classes. All
// metrics here depend only on the ordering of the entries, never on their
// magnitudes.

struct SetOverlap {
  double ratio = 0.0;
  std::size_t intersection = 0;
};

/// Indices of the K largest entries; equal entries prefer the lower index.
std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k);

/// |top-K(f1) ∩ top-K(f2)| / K. Throws ConfigError when K is 0 or exceeds the length.
SetOverlap set_overlap(std::span<const double> f1, std::span<const double> f2, std::size_t k);

/// Zero-based position of every entry in the ascending sort (ties by index).
std::vector<double> ascending_ranks(std::span<const double> values);

/// Pearson correlation of the two rank vectors.
double spearman(std::span<const double> f1, std::span<const double> f2);

enum class KendallConvention {
  signed_pairs,  ///< sg(x) in {+1, 0, -1}: the standard statistic
  indicator,     ///< sg(x) = 1 if x > 0 else 0, normalised by C(C-1)/2
};

double kendall(std::span<const double> f1, std::span<const double> f2,
               KendallConvention convention = KendallConvention::signed_pairs);

/// "target: p0, p1, ..." asserts p_target > p_p0 > p_p1 > ...
struct AffinityRule {
  std::size_t target = 0;
  std::vector<std::size_t> ordered_peers;
};

void validate(const AffinityRule& rule, std::size_t num_classes);

enum class RuleScope {
  with_target,  ///< rank [target, peers...]; the full ordering stated by the rule
  peers_only,   ///< rank the peers among themselves
};

struct RuleConsistency {
  double kendall = 0.0;
  double non_gt_std = 0.0;  ///< population std of the peer probabilities
};

RuleConsistency rule_consistency(const LogitRecord& record, const ProbabilityVector& probs,
                                 const AffinityRule& rule,
                                 RuleScope scope = RuleScope::with_target);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
};

MetricSummary summarize(std::span<const double> values);

struct PairMetrics {
  std::string sample_id;
  double overlap_ratio = 0.0;
  std::size_t intersection = 0;
  double spearman = 0.0;
  double kendall_signed = 0.0;
  double kendall_indicator = 0.0;
};

/// counts[k - 1][m] = number of samples whose top-k sets share exactly m classes.
struct OverlapHistogram {
  std::size_t k_max = 0;
  std::vector<std::vector<std::size_t>> counts;
};

struct AffinityOptions {
  std::size_t k = 5;
  bool exclude_gt = false;
};

struct AffinityReport {
  std::size_t k = 0;
  bool exclude_gt = false;
  std::vector<PairMetrics> per_sample;
  MetricSummary overlap;
  MetricSummary spearman;
  MetricSummary kendall_signed;
  MetricSummary kendall_indicator;
  OverlapHistogram histogram;
};

/// Throws InputError listing up to five offending rows if the collections
/// differ in length, sample ids, or labels.
void check_aligned(std::span<const LogitRecord> a, std::span<const LogitRecord> b);

OverlapHistogram overlap_histogram(std::span<const LogitRecord> a, std::span<const LogitRecord> b,
                                   std::size_t k_max, bool exclude_gt = false);

/// Per-sample overlap/Spearman/Kendall between two aligned collections plus
/// aggregates and the top-k histogram up to k.
AffinityReport analyze_pair(std::span<const LogitRecord> a, std::span<const LogitRecord> b,
                            const AffinityOptions& options);

}  // namespace dkd
