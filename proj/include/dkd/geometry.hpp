#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dkd/probability.hpp"

namespace dkd {

struct FeatureRecord {
  std::string sample_id;
  std::size_t label = 0;
  Vector features;
};

/// Checks D >= 2, finite entries and non-zero norm. Throws InputError.
void validate(const FeatureRecord& record);

/// Angle between two vectors in degrees, in [0, 180]. Throws InputError on a zero vector.
double feature_angle(std::span<const double> h1, std::span<const double> h2);

struct BucketStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t pairs_used = 0;
  std::size_t pairs_total = 0;
};

/// "within" holds same-label pairs and "between" different-label pairs. A
/// bucket with no pairs is left empty.
struct AngleStats {
  std::optional<BucketStats> within;
  std::optional<BucketStats> between;
};

inline constexpr std::size_t kDefaultMaxPairsPerBucket = 200'000;

/// Mean/std of pairwise angles per bucket. Buckets larger than
/// `max_pairs_per_bucket` are subsampled uniformly without replacement; the
/// selection depends only on (records, cap, seed).
AngleStats class_angle_stats(std::span<const FeatureRecord> records,
                             std::size_t max_pairs_per_bucket = kDefaultMaxPairsPerBucket,
                             std::uint64_t seed = 0);

}  // namespace dkd
