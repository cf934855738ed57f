#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dkd {

/// Symmetric temperature scaling: every logit divided by `tau`.
struct TsPolicy {
  double tau = 1.0;
};

/// Asymmetric temperature scaling: the ground-truth logit is divided by
/// `tau_gt`, all other logits by `tau_other`, followed by one shared softmax.
struct AtsPolicy {
  double tau_gt = 1.0;
  double tau_other = 1.0;
};

/// Instance-specific ATS. `chosen` is filled in once a sample's temperature
/// has been searched; the applied pair is (chosen + offset, chosen).
struct IsatsPolicy {
  std::vector<double> grid;
  double offset = 1.0;
  std::optional<double> chosen;
};

using TemperaturePolicy = std::variant<TsPolicy, AtsPolicy, IsatsPolicy>;

/// Grid used for the per-sample temperature search unless overridden.
std::vector<double> default_isats_grid();

/// Grid must be non-empty, strictly ascending and positive. Throws ConfigError.
void validate_grid(const std::vector<double>& grid);
/// Throws ConfigError on non-positive temperatures, a bad grid, or negative offset.
void validate_policy(const TemperaturePolicy& policy);

/// Parses `ts:<tau>`, `ats:<tau_gt>,<tau_other>` or
/// `isats:<g0>,<g1>,...[;+<offset>]`. Throws UsageError naming the grammar.
TemperaturePolicy parse_policy(std::string_view descriptor);
/// Inverse of parse_policy; `chosen` is not part of the descriptor.
std::string format_policy(const TemperaturePolicy& policy);

inline constexpr std::string_view kPolicyGrammar =
    "ts:<tau> | ats:<tau_gt>,<tau_other> | isats:<t0>,<t1>,...[;+<offset>]";

}  // namespace dkd
