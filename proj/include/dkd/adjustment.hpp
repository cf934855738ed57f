#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dkd/probability.hpp"

namespace dkd {

/// Mean softened teacher output over all training samples of one class.
struct ClassPrior {
  std::size_t class_index = 0;
  Vector mean_probs;
  std::size_t count = 0;
  double tau0 = 1.0;
};

/// One prior per class, indexed by class. Every class in [0, C) must have at
/// least one record (ConfigError names the first empty class).
std::vector<ClassPrior> build_class_priors(std::span<const LogitRecord> records, double tau0);

/// Label fusion: (1 - alpha) * soften(logits, tau) + alpha * prior.
ProbabilityVector fgcr_fuse(const LogitRecord& record, const ClassPrior& prior, double tau,
                            double alpha);

/// Prior temperature used when none is given: tau - 1, floored at 1.
double default_prior_temperature(double tau);

/// p_y - std(q) for probabilities produced at temperature 1.
double regt_penalty(const ProbabilityVector& probs_at_1, std::size_t label);

/// Gradient of regt_penalty with respect to the probabilities. The std term
/// contributes nothing when the non-ground-truth entries are all equal.
Vector regt_penalty_prob_gradient(std::span<const double> probs, std::size_t label);

}  // namespace dkd
