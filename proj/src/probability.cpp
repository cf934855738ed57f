#include "dkd/probability.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dkd/error.hpp"

namespace dkd {

void validate(const LogitRecord& record) {
  if (record.logits.size() < 2) {
    throw InputError(fmt::format("sample '{}': need at least 2 classes, got {}", record.sample_id,
                                 record.logits.size()));
  }
  if (record.label >= record.logits.size()) {
    throw InputError(fmt::format("sample '{}': label {} out of range [0, {})", record.sample_id,
                                 record.label, record.logits.size()));
  }
  for (std::size_t c = 0; c < record.logits.size(); ++c) {
    if (!std::isfinite(record.logits[c])) {
      throw InputError(fmt::format("sample '{}': logit {} is not finite", record.sample_id, c));
    }
  }
}

Vector scaled_softmax(std::span<const double> logits, std::span<const double> divisors) {
  if (logits.size() != divisors.size()) {
    throw InputError("scaled_softmax: logits and divisors differ in length");
  }
  if (logits.empty()) {
    throw InputError("scaled_softmax: empty logit vector");
  }
  Vector out(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (!std::isfinite(logits[c])) {
      throw InputError(fmt::format("logit {} is not finite", c));
    }
    if (!(divisors[c] > 0.0) || !std::isfinite(divisors[c])) {
      throw DomainError(fmt::format("temperature must be positive and finite, got {}", divisors[c]));
    }
    out[c] = logits[c] / divisors[c];
  }
  const double top = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : out) v /= total;
  return out;
}

ProbabilityVector soften(std::span<const double> logits, double tau) {
  const Vector divisors(logits.size(), tau);
  return {scaled_softmax(logits, divisors), TsPolicy{tau}};
}

Vector drop_index(std::span<const double> values, std::size_t label) {
  Vector out;
  out.reserve(values.empty() ? 0 : values.size() - 1);
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (c != label) out.push_back(values[c]);
  }
  return out;
}

NonGtView split_gt(const LogitRecord& record, const ProbabilityVector& probs) {
  validate(record);
  if (probs.probs.size() != record.logits.size()) {
    throw InputError(fmt::format("sample '{}': {} probabilities for {} logits", record.sample_id,
                                 probs.probs.size(), record.logits.size()));
  }
  NonGtView view;
  view.gt_prob = probs.probs[record.label];
  view.gt_logit = record.logits[record.label];
  view.non_gt_probs = drop_index(probs.probs, record.label);
  view.non_gt_logits = drop_index(record.logits, record.label);
  return view;
}

Dispersion dispersion(std::span<const double> values) {
  if (values.empty()) throw InputError("dispersion of an empty vector");
  const auto n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  const double variance = acc / n;
  return {variance, std::sqrt(variance)};
}

double non_gt_std(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) throw InputError("non_gt_std: label out of range");
  return dispersion(drop_index(probs, label)).std;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InputError("argmax of an empty vector");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace dkd
