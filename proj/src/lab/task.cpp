#include "dkd/lab/task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "dkd/error.hpp"

namespace dkd::lab {

void validate(const GroupTaskSpec& spec) {
  if (spec.n_superclasses < 2) throw ConfigError("task needs at least 2 superclasses");
  if (spec.n_fine_per_super < 2) throw ConfigError("task needs at least 2 fine classes per superclass");
  if (spec.input_dim < 1) throw ConfigError("task input_dim must be positive");
  if (!(spec.super_center_scale > 0.0)) throw ConfigError("super_center_scale must be positive");
  if (!(spec.fine_center_scale > 0.0)) throw ConfigError("fine_center_scale must be positive");
  if (!(spec.fine_center_scale < spec.super_center_scale)) {
    throw ConfigError(fmt::format("fine_center_scale ({}) must be below super_center_scale ({})",
                                  spec.fine_center_scale, spec.super_center_scale));
  }
  if (!(spec.noise_std >= 0.0) || !std::isfinite(spec.noise_std)) {
    throw ConfigError("noise_std must be non-negative");
  }
  if (spec.n_train_per_class < 1) throw ConfigError("n_train_per_class must be positive");
}

std::size_t superclass_of(const GroupTaskSpec& spec, std::size_t fine_class) {
  return fine_class / spec.n_fine_per_super;
}

namespace {

Dataset sample_split(const GroupTaskSpec& spec, const Eigen::MatrixXd& centers,
                     std::size_t per_class, const char* prefix, std::mt19937_64& rng) {
  const std::size_t num_classes = spec.num_classes();
  Dataset data;
  data.inputs.resize(static_cast<Eigen::Index>(spec.input_dim),
                     static_cast<Eigen::Index>(per_class * num_classes));
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::Index col = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i, ++col) {
      for (Eigen::Index d = 0; d < data.inputs.rows(); ++d) {
        data.inputs(d, col) = centers(d, static_cast<Eigen::Index>(c)) + spec.noise_std * noise(rng);
      }
      data.labels.push_back(c);
      data.ids.push_back(fmt::format("{}{:05d}", prefix, col));
    }
  }
  return data;
}

}  // namespace

GroupTask generate_group_task(const GroupTaskSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const auto dim = static_cast<Eigen::Index>(spec.input_dim);
  const auto num_classes = static_cast<Eigen::Index>(spec.num_classes());

  Eigen::MatrixXd super_centers(dim, static_cast<Eigen::Index>(spec.n_superclasses));
  for (Eigen::Index s = 0; s < super_centers.cols(); ++s) {
    for (Eigen::Index d = 0; d < dim; ++d) super_centers(d, s) = spec.super_center_scale * unit(rng);
  }
  GroupTask task;
  task.spec = spec;
  task.centers.resize(dim, num_classes);
  for (Eigen::Index c = 0; c < num_classes; ++c) {
    const auto s = static_cast<Eigen::Index>(superclass_of(spec, static_cast<std::size_t>(c)));
    for (Eigen::Index d = 0; d < dim; ++d) {
      task.centers(d, c) = super_centers(d, s) + spec.fine_center_scale * unit(rng);
    }
  }
  task.train = sample_split(spec, task.centers, spec.n_train_per_class, "tr", rng);
  task.test = sample_split(spec, task.centers, spec.n_test_per_class, "te", rng);
  task.rules = ground_truth_rules(spec, task.centers);
  return task;
}

std::vector<AffinityRule> ground_truth_rules(const GroupTaskSpec& spec,
                                             const Eigen::MatrixXd& centers) {
  std::vector<AffinityRule> rules;
  for (std::size_t c = 0; c < spec.num_classes(); ++c) {
    const std::size_t first = superclass_of(spec, c) * spec.n_fine_per_super;
    AffinityRule rule{c, {}};
    for (std::size_t s = first; s < first + spec.n_fine_per_super; ++s) {
      if (s != c) rule.ordered_peers.push_back(s);
    }
    const auto dist = [&](std::size_t other) {
      return (centers.col(static_cast<Eigen::Index>(c)) - centers.col(static_cast<Eigen::Index>(other)))
          .squaredNorm();
    };
    std::stable_sort(rule.ordered_peers.begin(), rule.ordered_peers.end(),
                     [&](std::size_t a, std::size_t b) { return dist(a) < dist(b); });
    rules.push_back(std::move(rule));
  }
  return rules;
}

}  // namespace dkd::lab
