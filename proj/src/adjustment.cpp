#include "dkd/adjustment.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dkd/error.hpp"

namespace dkd {

std::vector<ClassPrior> build_class_priors(std::span<const LogitRecord> records, double tau0) {
  if (records.empty()) throw ConfigError("cannot build class priors from zero records");
  if (!(tau0 > 0.0)) throw DomainError(fmt::format("prior temperature must be positive, got {}", tau0));
  const std::size_t num_classes = records.front().num_classes();
  std::vector<ClassPrior> priors(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    priors[c].class_index = c;
    priors[c].mean_probs.assign(num_classes, 0.0);
    priors[c].tau0 = tau0;
  }
  for (const auto& record : records) {
    validate(record);
    if (record.num_classes() != num_classes) {
      throw InputError(fmt::format("sample '{}' has {} classes, expected {}", record.sample_id,
                                   record.num_classes(), num_classes));
    }
    const auto probs = soften(record.logits, tau0);
    auto& prior = priors[record.label];
    for (std::size_t c = 0; c < num_classes; ++c) prior.mean_probs[c] += probs.probs[c];
    ++prior.count;
  }
  for (auto& prior : priors) {
    if (prior.count == 0) {
      throw ConfigError(fmt::format("class {} has no records; cannot build its prior",
                                    prior.class_index));
    }
    for (double& v : prior.mean_probs) v /= static_cast<double>(prior.count);
  }
  return priors;
}

double default_prior_temperature(double tau) { return std::max(tau - 1.0, 1.0); }

ProbabilityVector fgcr_fuse(const LogitRecord& record, const ClassPrior& prior, double tau,
                            double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError(fmt::format("FGCR alpha must lie in [0, 1], got {}", alpha));
  }
  validate(record);
  if (prior.class_index != record.label) {
    throw InputError(fmt::format("sample '{}' has label {} but prior is for class {}",
                                 record.sample_id, record.label, prior.class_index));
  }
  if (prior.mean_probs.size() != record.num_classes()) {
    throw InputError("class prior length does not match the logit vector");
  }
  auto out = soften(record.logits, tau);
  for (std::size_t c = 0; c < out.probs.size(); ++c) {
    out.probs[c] = (1.0 - alpha) * out.probs[c] + alpha * prior.mean_probs[c];
  }
  return out;
}

double regt_penalty(const ProbabilityVector& probs_at_1, std::size_t label) {
  if (label >= probs_at_1.probs.size()) throw InputError("regt_penalty: label out of range");
  if (probs_at_1.probs.size() < 2) throw InputError("regt_penalty: need at least 2 classes");
  return probs_at_1.probs[label] - non_gt_std(probs_at_1.probs, label);
}

Vector regt_penalty_prob_gradient(std::span<const double> probs, std::size_t label) {
  const std::size_t n = probs.size();
  Vector grad(n, 0.0);
  grad[label] = 1.0;
  const auto q = drop_index(probs, label);
  const auto [variance, sd] = dispersion(q);
  if (sd <= 0.0) return grad;
  double mean = 0.0;
  for (double v : q) mean += v;
  mean /= static_cast<double>(q.size());
  const double scale = 1.0 / (static_cast<double>(q.size()) * sd);
  for (std::size_t c = 0; c < n; ++c) {
    if (c != label) grad[c] = -(probs[c] - mean) * scale;
  }
  return grad;
}

}  // namespace dkd
