#pragma once

#include <span>
#include <vector>

#include "dkd/probability.hpp"
#include "dkd/temperature_policy.hpp"

namespace dkd {

ProbabilityVector apply_ts(const LogitRecord& record, double tau);

/// Ground-truth logit scaled by 1/tau_gt, the rest by 1/tau_other, one softmax.
ProbabilityVector apply_ats(const LogitRecord& record, double tau_gt, double tau_other);

/// Grid temperature maximising the variance of the non-ground-truth
/// probabilities under symmetric softening. Ties resolve to the smaller
/// temperature. Throws ConfigError on an empty or non-ascending grid.
double find_instance_temperature(const LogitRecord& record, std::span<const double> grid);

/// ATS at (tau* + offset, tau*) where tau* comes from find_instance_temperature.
/// The returned policy records tau*.
ProbabilityVector apply_isats(const LogitRecord& record, std::span<const double> grid,
                              double offset = 1.0);

/// Dispatches on the policy kind.
ProbabilityVector apply_policy(const LogitRecord& record, const TemperaturePolicy& policy);

/// Temperature used for the ground-truth and non-ground-truth logits once
/// a policy has been resolved for a sample (ISATS must carry `chosen`).
struct TemperaturePair {
  double gt = 1.0;
  double other = 1.0;
};
TemperaturePair resolved_temperatures(const TemperaturePolicy& policy);

}  // namespace dkd
