#include "dkd/lab/mlp.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "dkd/error.hpp"

namespace dkd::lab {

namespace {

bool is_rectified(std::size_t layer, std::size_t num_layers) { return layer + 2 < num_layers; }

void check_widths(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) throw ConfigError("an MLP needs at least input and output widths");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("MLP layer widths must be positive");
  }
}

}  // namespace

std::size_t MlpModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& w : weights) total += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) total += static_cast<std::size_t>(b.size());
  return total;
}

MlpModel zero_mlp(std::vector<std::size_t> widths) {
  check_widths(widths);
  MlpModel model;
  model.widths = std::move(widths);
  const std::size_t layers = model.widths.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<Eigen::Index>(model.widths[l]);
    const auto out = static_cast<Eigen::Index>(model.widths[l + 1]);
    model.weights.push_back(Eigen::MatrixXd::Zero(out, in));
    if (l + 1 < layers) model.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return model;
}

MlpModel init_mlp(std::vector<std::size_t> widths, std::uint64_t seed) {
  auto model = zero_mlp(std::move(widths));
  std::mt19937_64 rng(seed);
  for (auto& w : model.weights) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(w.cols())));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  }
  return model;
}

void validate(const MlpModel& model) {
  check_widths(model.widths);
  const std::size_t layers = model.widths.size() - 1;
  if (model.weights.size() != layers || model.biases.size() + 1 != layers) {
    throw InputError("MLP parameter count does not match its widths");
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = model.weights[l];
    if (static_cast<std::size_t>(w.rows()) != model.widths[l + 1] ||
        static_cast<std::size_t>(w.cols()) != model.widths[l]) {
      throw InputError(fmt::format("MLP layer {} has shape {}x{}, expected {}x{}", l, w.rows(),
                                   w.cols(), model.widths[l + 1], model.widths[l]));
    }
    if (!w.allFinite()) throw InputError(fmt::format("MLP layer {} has non-finite weights", l));
    if (l + 1 < layers) {
      if (static_cast<std::size_t>(model.biases[l].size()) != model.widths[l + 1]) {
        throw InputError(fmt::format("MLP layer {} bias has the wrong length", l));
      }
      if (!model.biases[l].allFinite()) {
        throw InputError(fmt::format("MLP layer {} has non-finite biases", l));
      }
    }
  }
}

ForwardCache forward_batch(const MlpModel& model, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != model.widths.front()) {
    throw InputError(fmt::format("input dimension {} does not match model input width {}",
                                 inputs.rows(), model.widths.front()));
  }
  const std::size_t layers = model.num_layers();
  ForwardCache cache;
  cache.activations.reserve(layers + 1);
  cache.activations.push_back(inputs);
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd out = model.weights[l] * cache.activations.back();
    if (l + 1 < layers) out.colwise() += model.biases[l];
    if (is_rectified(l, layers)) out = out.cwiseMax(0.0);
    cache.activations.push_back(std::move(out));
  }
  return cache;
}

ForwardResult forward(const MlpModel& model, std::span<const double> input) {
  const Eigen::Map<const Eigen::VectorXd> column(input.data(), static_cast<Eigen::Index>(input.size()));
  const auto cache = forward_batch(model, Eigen::MatrixXd(column));
  const auto& logits = cache.logits();
  const auto& features = cache.features();
  return {Vector(logits.data(), logits.data() + logits.size()),
          Vector(features.data(), features.data() + features.size())};
}

MlpGradient backward(const MlpModel& model, const ForwardCache& cache,
                     const Eigen::MatrixXd& grad_logits) {
  const std::size_t layers = model.num_layers();
  MlpGradient grad;
  grad.weights.resize(layers);
  grad.biases.resize(layers - 1);
  Eigen::MatrixXd delta = grad_logits;
  for (std::size_t l = layers; l-- > 0;) {
    if (is_rectified(l, layers)) {
      delta = delta.cwiseProduct((cache.activations[l + 1].array() > 0.0).cast<double>().matrix());
    }
    grad.weights[l] = delta * cache.activations[l].transpose();
    if (l + 1 < layers) grad.biases[l] = delta.rowwise().sum();
    if (l > 0) delta = model.weights[l].transpose() * delta;
  }
  return grad;
}

}  // namespace dkd::lab
