#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dkd/affinity.hpp"

namespace dkd::lab {

/// Gaussian group-classification task: superclass centres, fine-class
/// centres scattered around them, isotropic sample noise.
struct GroupTaskSpec {
  std::size_t n_superclasses = 4;
  std::size_t n_fine_per_super = 3;
  std::size_t input_dim = 16;
  double super_center_scale = 1.0;
  double fine_center_scale = 0.35;
  double noise_std = 0.7;
  std::size_t n_train_per_class = 200;
  std::size_t n_test_per_class = 100;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t num_classes() const { return n_superclasses * n_fine_per_super; }
};

void validate(const GroupTaskSpec& spec);

/// Samples are stored column-wise: inputs is input_dim x n.
struct Dataset {
  Eigen::MatrixXd inputs;
  std::vector<std::size_t> labels;
  std::vector<std::string> ids;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
};

struct GroupTask {
  GroupTaskSpec spec;
  Dataset train;
  Dataset test;
  Eigen::MatrixXd centers;  ///< input_dim x C, fine-class centres
  std::vector<AffinityRule> rules;  ///< rules[c] targets class c
};

/// Fine class c belongs to superclass c / n_fine_per_super.
std::size_t superclass_of(const GroupTaskSpec& spec, std::size_t fine_class);

GroupTask generate_group_task(const GroupTaskSpec& spec);

/// Each class's same-superclass siblings ordered by ascending centre distance.
std::vector<AffinityRule> ground_truth_rules(const GroupTaskSpec& spec,
                                             const Eigen::MatrixXd& centers);

}  // namespace dkd::lab
