#include "dkd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "dkd/error.hpp"

namespace dkd {

void validate(const FeatureRecord& record) {
  if (record.features.size() < 2) {
    throw InputError(fmt::format("sample '{}': feature dimension must be >= 2", record.sample_id));
  }
  double norm2 = 0.0;
  for (double v : record.features) {
    if (!std::isfinite(v)) {
      throw InputError(fmt::format("sample '{}': non-finite feature", record.sample_id));
    }
    norm2 += v * v;
  }
  if (norm2 == 0.0) {
    throw InputError(fmt::format("sample '{}': zero-norm feature vector", record.sample_id));
  }
}

double feature_angle(std::span<const double> h1, std::span<const double> h2) {
  if (h1.size() != h2.size()) throw InputError("feature_angle: dimension mismatch");
  double n1 = 0.0;
  double n2 = 0.0;
  for (std::size_t i = 0; i < h1.size(); ++i) {
    n1 += h1[i] * h1[i];
    n2 += h2[i] * h2[i];
  }
  if (n1 == 0.0 || n2 == 0.0) throw InputError("feature_angle: zero-norm vector");
  // Half-angle form: acos of the cosine loses half the digits near 0 and 180 degrees.
  const double s1 = 1.0 / std::sqrt(n1);
  const double s2 = 1.0 / std::sqrt(n2);
  double diff = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < h1.size(); ++i) {
    const double u = h1[i] * s1;
    const double v = h2[i] * s2;
    diff += (u - v) * (u - v);
    sum += (u + v) * (u + v);
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum)) * 180.0 / std::numbers::pi;
}

namespace {

struct PairIndex {
  std::uint32_t i;
  std::uint32_t j;
};

std::optional<BucketStats> bucket_stats(std::span<const FeatureRecord> records,
                                        const std::vector<PairIndex>& pairs, std::size_t cap,
                                        std::mt19937_64& rng) {
  if (pairs.empty()) return std::nullopt;
  std::vector<PairIndex> chosen;
  if (pairs.size() <= cap) {
    chosen = pairs;
  } else {
    chosen.reserve(cap);
    std::sample(pairs.begin(), pairs.end(), std::back_inserter(chosen), cap, rng);
  }
  Vector angles;
  angles.reserve(chosen.size());
  for (const auto& p : chosen) {
    angles.push_back(feature_angle(records[p.i].features, records[p.j].features));
  }
  const auto d = dispersion(angles);
  double mean = 0.0;
  for (double a : angles) mean += a;
  return BucketStats{mean / static_cast<double>(angles.size()), d.std, angles.size(), pairs.size()};
}

}  // namespace

AngleStats class_angle_stats(std::span<const FeatureRecord> records,
                             std::size_t max_pairs_per_bucket, std::uint64_t seed) {
  if (records.size() < 2) throw InputError("class_angle_stats: need at least 2 records");
  if (max_pairs_per_bucket == 0) throw ConfigError("class_angle_stats: pair cap must be positive");
  for (const auto& r : records) {
    validate(r);
    if (r.features.size() != records.front().features.size()) {
      throw InputError(fmt::format("sample '{}': feature dimension mismatch", r.sample_id));
    }
  }
  std::vector<PairIndex> within;
  std::vector<PairIndex> between;
  const auto n = static_cast<std::uint32_t>(records.size());
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      (records[i].label == records[j].label ? within : between).push_back({i, j});
    }
  }
  std::mt19937_64 rng(seed);
  AngleStats stats;
  stats.within = bucket_stats(records, within, max_pairs_per_bucket, rng);
  stats.between = bucket_stats(records, between, max_pairs_per_bucket, rng);
  return stats;
}

}  // namespace dkd
