#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dkd/temperature_policy.hpp"

namespace dkd {

using Vector = std::vector<double>;

/// One sample's identifier, ground-truth class and raw logits.
struct LogitRecord {
  std::string sample_id;
  std::size_t label = 0;
  Vector logits;

  [[nodiscard]] std::size_t num_classes() const noexcept { return logits.size(); }
};

/// Checks C >= 2, label < C and finite logits. Throws InputError.
void validate(const LogitRecord& record);

/// A point on the probability simplex together with the policy that produced it.
struct ProbabilityVector {
  Vector probs;
  TemperaturePolicy policy = TsPolicy{1.0};
};

/// Ground-truth / non-ground-truth split of one sample. Non-ground-truth
/// entries keep ascending original class order with the label removed.
struct NonGtView {
  double gt_prob = 0.0;
  Vector non_gt_probs;
  double gt_logit = 0.0;
  Vector non_gt_logits;
};

struct Dispersion {
  double variance = 0.0;
  double std = 0.0;
};

/// Softmax of `logits / tau`, stabilised by subtracting the largest scaled logit.
/// Throws DomainError for tau <= 0 and InputError for non-finite logits.
ProbabilityVector soften(std::span<const double> logits, double tau);

/// Softmax of `logits[c] / divisors[c]` with one shared normaliser. Every
/// policy is evaluated through this routine so that equal divisors give
/// bit-identical results regardless of which policy requested them.
Vector scaled_softmax(std::span<const double> logits, std::span<const double> divisors);

NonGtView split_gt(const LogitRecord& record, const ProbabilityVector& probs);

/// Removes position `label` from `values`.
Vector drop_index(std::span<const double> values, std::size_t label);

/// Population variance (divide by n) and its square root. Throws InputError on empty input.
Dispersion dispersion(std::span<const double> values);

/// Population std of the non-ground-truth entries of `probs`.
double non_gt_std(std::span<const double> probs, std::size_t label);

std::size_t argmax(std::span<const double> values);

}  // namespace dkd
