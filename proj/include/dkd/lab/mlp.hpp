#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dkd/probability.hpp"

namespace dkd::lab {

/// Fully-connected network. widths = {input, hidden..., feature, classes}.
/// Hidden layers use a rectifier; the feature layer is linear; the final
/// layer maps features to logits without a bias.
struct MlpModel {
  std::vector<std::size_t> widths;
  std::vector<Eigen::MatrixXd> weights;  ///< weights[l] is widths[l+1] x widths[l]
  std::vector<Eigen::VectorXd> biases;   ///< one per layer except the last

  [[nodiscard]] std::size_t num_layers() const { return weights.size(); }
  [[nodiscard]] std::size_t num_classes() const { return widths.back(); }
  [[nodiscard]] std::size_t feature_dim() const { return widths[widths.size() - 2]; }
  [[nodiscard]] std::size_t parameter_count() const;
};

/// Same shapes as the model's parameters.
struct MlpGradient {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// He-normal weights, zero biases, deterministic under `seed`.
MlpModel init_mlp(std::vector<std::size_t> widths, std::uint64_t seed);

/// All-zero model of the given shape.
MlpModel zero_mlp(std::vector<std::size_t> widths);

void validate(const MlpModel& model);

/// Layer outputs for a batch of column-wise inputs. activations[0] is the
/// input; activations[l + 1] is the (post-activation) output of layer l.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;

  [[nodiscard]] const Eigen::MatrixXd& logits() const { return activations.back(); }
  [[nodiscard]] const Eigen::MatrixXd& features() const {
    return activations[activations.size() - 2];
  }
};

ForwardCache forward_batch(const MlpModel& model, const Eigen::MatrixXd& inputs);

struct ForwardResult {
  Vector logits;
  Vector features;
};

ForwardResult forward(const MlpModel& model, std::span<const double> input);

/// Parameter gradient given dLoss/dLogits for the cached batch.
MlpGradient backward(const MlpModel& model, const ForwardCache& cache,
                     const Eigen::MatrixXd& grad_logits);

}  // namespace dkd::lab
