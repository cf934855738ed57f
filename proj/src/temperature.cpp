#include "dkd/temperature.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "dkd/error.hpp"

namespace dkd {

std::vector<double> default_isats_grid() { return {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0}; }

void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("temperature grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
      throw ConfigError(fmt::format("temperature grid entry {} is not positive: {}", i, grid[i]));
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ConfigError("temperature grid must be strictly ascending");
    }
  }
}

namespace {

void require_positive(double tau, const char* name) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ConfigError(fmt::format("{} must be positive and finite, got {}", name, tau));
  }
}

double parse_number(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end) {
    throw UsageError(fmt::format("bad number '{}' in policy descriptor; expected {}", text,
                                 kPolicyGrammar));
  }
  return value;
}

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  while (true) {
    const auto comma = text.find(',');
    out.push_back(parse_number(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace

void validate_policy(const TemperaturePolicy& policy) {
  std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TsPolicy>) {
          require_positive(p.tau, "tau");
        } else if constexpr (std::is_same_v<T, AtsPolicy>) {
          require_positive(p.tau_gt, "tau_gt");
          require_positive(p.tau_other, "tau_other");
        } else {
          validate_grid(p.grid);
          if (!(p.offset >= 0.0) || !std::isfinite(p.offset)) {
            throw ConfigError(fmt::format("ISATS offset must be >= 0, got {}", p.offset));
          }
        }
      },
      policy);
}

TemperaturePolicy parse_policy(std::string_view descriptor) {
  const auto colon = descriptor.find(':');
  if (colon == std::string_view::npos) {
    throw UsageError(fmt::format("policy '{}' has no kind prefix; expected {}", descriptor,
                                 kPolicyGrammar));
  }
  const auto kind = descriptor.substr(0, colon);
  auto body = descriptor.substr(colon + 1);
  TemperaturePolicy policy;
  if (kind == "ts") {
    policy = TsPolicy{parse_number(body)};
  } else if (kind == "ats") {
    const auto values = parse_list(body);
    if (values.size() != 2) {
      throw UsageError(fmt::format("ats takes two temperatures; expected {}", kPolicyGrammar));
    }
    policy = AtsPolicy{values[0], values[1]};
  } else if (kind == "isats") {
    IsatsPolicy isats;
    const auto semi = body.find(';');
    if (semi != std::string_view::npos) {
      const auto offset = body.substr(semi + 1);
      if (offset.empty() || offset.front() != '+') {
        throw UsageError(fmt::format("isats offset must be written '+<offset>'; expected {}",
                                     kPolicyGrammar));
      }
      isats.offset = parse_number(offset);
      body = body.substr(0, semi);
    }
    isats.grid = parse_list(body);
    policy = std::move(isats);
  } else {
    throw UsageError(fmt::format("unknown policy kind '{}'; expected {}", kind, kPolicyGrammar));
  }
  try {
    validate_policy(policy);
  } catch (const ConfigError& e) {
    throw UsageError(fmt::format("{}; expected {}", e.what(), kPolicyGrammar));
  }
  return policy;
}

std::string format_policy(const TemperaturePolicy& policy) {
  return std::visit(
      [](const auto& p) -> std::string {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TsPolicy>) {
          return fmt::format("ts:{}", p.tau);
        } else if constexpr (std::is_same_v<T, AtsPolicy>) {
          return fmt::format("ats:{},{}", p.tau_gt, p.tau_other);
        } else {
          return fmt::format("isats:{};+{}", fmt::join(p.grid, ","), p.offset);
        }
      },
      policy);
}

ProbabilityVector apply_ats(const LogitRecord& record, double tau_gt, double tau_other) {
  validate(record);
  if (!(tau_gt > 0.0) || !(tau_other > 0.0)) {
    throw DomainError(fmt::format("ATS temperatures must be positive, got ({}, {})", tau_gt,
                                  tau_other));
  }
  Vector divisors(record.logits.size(), tau_other);
  divisors[record.label] = tau_gt;
  return {scaled_softmax(record.logits, divisors), AtsPolicy{tau_gt, tau_other}};
}

ProbabilityVector apply_ts(const LogitRecord& record, double tau) {
  // Same code path as ATS so that ats:t,t and ts:t agree bit for bit.
  auto out = apply_ats(record, tau, tau);
  out.policy = TsPolicy{tau};
  return out;
}

double find_instance_temperature(const LogitRecord& record, std::span<const double> grid) {
  validate_grid(std::vector<double>(grid.begin(), grid.end()));
  validate(record);
  double best_tau = grid.front();
  double best_var = -1.0;
  for (double tau : grid) {
    const auto probs = apply_ts(record, tau);
    const double var = dispersion(drop_index(probs.probs, record.label)).variance;
    if (var > best_var) {
      best_var = var;
      best_tau = tau;
    }
  }
  return best_tau;
}

ProbabilityVector apply_isats(const LogitRecord& record, std::span<const double> grid,
                              double offset) {
  if (!(offset >= 0.0) || !std::isfinite(offset)) {
    throw ConfigError(fmt::format("ISATS offset must be >= 0, got {}", offset));
  }
  const double tau_star = find_instance_temperature(record, grid);
  auto out = apply_ats(record, tau_star + offset, tau_star);
  out.policy = IsatsPolicy{std::vector<double>(grid.begin(), grid.end()), offset, tau_star};
  return out;
}

ProbabilityVector apply_policy(const LogitRecord& record, const TemperaturePolicy& policy) {
  return std::visit(
      [&](const auto& p) -> ProbabilityVector {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TsPolicy>) {
          return apply_ts(record, p.tau);
        } else if constexpr (std::is_same_v<T, AtsPolicy>) {
          return apply_ats(record, p.tau_gt, p.tau_other);
        } else {
          return apply_isats(record, p.grid, p.offset);
        }
      },
      policy);
}

TemperaturePair resolved_temperatures(const TemperaturePolicy& policy) {
  return std::visit(
      [](const auto& p) -> TemperaturePair {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TsPolicy>) {
          return {p.tau, p.tau};
        } else if constexpr (std::is_same_v<T, AtsPolicy>) {
          return {p.tau_gt, p.tau_other};
        } else {
          if (!p.chosen) throw ConfigError("ISATS policy has no searched temperature yet");
          return {*p.chosen + p.offset, *p.chosen};
        }
      },
      policy);
}

}  // namespace dkd
