#include "dkd/lab/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "dkd/adjustment.hpp"
#include "dkd/error.hpp"
#include "dkd/temperature.hpp"

namespace dkd::lab {

void validate(const TrainConfig& config) {
  if (config.epochs == 0) throw ConfigError("epochs must be positive");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate)) {
    throw ConfigError("learning_rate must be non-negative");
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
    throw ConfigError("momentum must lie in [0, 1)");
  }
  if (!(config.lambda >= 0.0 && config.lambda <= 1.0)) {
    throw ConfigError(fmt::format("lambda must lie in [0, 1], got {}", config.lambda));
  }
  if (!(config.beta >= 0.0) || !std::isfinite(config.beta)) {
    throw ConfigError("beta must be non-negative");
  }
}

void run_sgd(MlpModel& model, const Dataset& train, const TrainConfig& config,
             const BatchLoss& loss) {
  validate(config);
  validate(model);
  if (train.size() == 0) throw ConfigError("empty training set");
  MlpGradient velocity;
  for (const auto& w : model.weights) velocity.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  for (const auto& b : model.biases) velocity.biases.push_back(Eigen::VectorXd::Zero(b.size()));

  std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Eigen::Index> cols;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      cols.assign(batch.begin(), batch.end());
      const Eigen::MatrixXd inputs = train.inputs(Eigen::all, cols);
      const auto cache = forward_batch(model, inputs);
      const auto result = loss(cache.logits(), batch);
      if (!std::isfinite(result.loss) || !result.grad_logits.allFinite()) {
        throw RunError(fmt::format("training diverged in epoch {} (non-finite loss)", epoch));
      }
      const auto grad = backward(model, cache, result.grad_logits);
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        velocity.weights[l] = config.momentum * velocity.weights[l] + grad.weights[l];
        model.weights[l] -= config.learning_rate * velocity.weights[l];
      }
      for (std::size_t l = 0; l < model.biases.size(); ++l) {
        velocity.biases[l] = config.momentum * velocity.biases[l] + grad.biases[l];
        model.biases[l] -= config.learning_rate * velocity.biases[l];
      }
    }
  }
}

std::vector<std::size_t> network_widths(const GroupTask& task,
                                        std::span<const std::size_t> hidden) {
  std::vector<std::size_t> widths{task.spec.input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(task.spec.num_classes());
  return widths;
}

double accuracy(const MlpModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const auto cache = forward_batch(model, data.inputs);
  std::size_t correct = 0;
  for (Eigen::Index j = 0; j < cache.logits().cols(); ++j) {
    Eigen::Index best = 0;
    cache.logits().col(j).maxCoeff(&best);
    if (static_cast<std::size_t>(best) == data.labels[static_cast<std::size_t>(j)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

TrainedModel finish(MlpModel model, const GroupTask& task) {
  TrainedModel out;
  out.train_accuracy = accuracy(model, task.train);
  out.test_accuracy = accuracy(model, task.test);
  out.final_loss = cross_entropy_loss(forward_batch(model, task.train.inputs).logits(),
                                      task.train.labels)
                       .loss;
  out.model = std::move(model);
  return out;
}

std::vector<std::size_t> gather(const std::vector<std::size_t>& values,
                                std::span<const std::size_t> batch) {
  std::vector<std::size_t> out;
  out.reserve(batch.size());
  for (std::size_t i : batch) out.push_back(values[i]);
  return out;
}

}  // namespace

TrainedModel train_teacher(const GroupTask& task, std::span<const std::size_t> hidden,
                           const TrainConfig& config, std::optional<double> regt_beta) {
  auto model = init_mlp(network_widths(task, hidden), config.seed);
  const double beta = regt_beta.value_or(0.0);
  if (!(beta >= 0.0)) throw ConfigError("RegT beta must be non-negative");
  run_sgd(model, task.train, config,
          [&](const Eigen::MatrixXd& logits, std::span<const std::size_t> batch) {
            const auto labels = gather(task.train.labels, batch);
            return regt_beta ? regt_loss(logits, labels, beta) : cross_entropy_loss(logits, labels);
          });
  return finish(std::move(model), task);
}

TrainedModel train_plain(const GroupTask& task, std::span<const std::size_t> hidden,
                         const TrainConfig& config) {
  return train_teacher(task, hidden, config);
}

DistillTargets build_targets(const MlpModel& teacher, const Dataset& train,
                             const TemperaturePolicy& policy,
                             const std::optional<FgcrOptions>& fgcr) {
  validate_policy(policy);
  const auto cache = forward_batch(teacher, train.inputs);
  const auto& logits = cache.logits();
  const auto n = logits.cols();

  std::vector<LogitRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    records.push_back({train.ids[static_cast<std::size_t>(j)], train.labels[static_cast<std::size_t>(j)],
                       Vector(logits.col(j).data(), logits.col(j).data() + logits.rows())});
  }

  DistillTargets targets;
  targets.probs.resize(logits.rows(), n);
  targets.student_tau.resize(n);

  std::vector<ClassPrior> priors;
  double fgcr_tau = 0.0;
  if (fgcr) {
    const auto* ts = std::get_if<TsPolicy>(&policy);
    if (ts == nullptr) throw ConfigError("FGCR fusion is defined on a TS policy only");
    fgcr_tau = ts->tau;
    priors = build_class_priors(records, fgcr->tau0.value_or(default_prior_temperature(ts->tau)));
  }

  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& record = records[static_cast<std::size_t>(j)];
    ProbabilityVector p = fgcr ? fgcr_fuse(record, priors[record.label], fgcr_tau, fgcr->alpha)
                               : apply_policy(record, policy);
    targets.probs.col(j) = Eigen::Map<const Eigen::VectorXd>(p.probs.data(), logits.rows());
    targets.student_tau(j) = resolved_temperatures(p.policy).other;
    if (const auto* isats = std::get_if<IsatsPolicy>(&p.policy)) {
      targets.chosen_tau.push_back(*isats->chosen);
    }
  }
  return targets;
}

DistillResult distill(const MlpModel& teacher, std::span<const std::size_t> student_hidden,
                      const GroupTask& task, const TrainConfig& config,
                      const TemperaturePolicy& policy, const std::optional<FgcrOptions>& fgcr) {
  if (teacher.widths.front() != task.spec.input_dim ||
      teacher.num_classes() != task.spec.num_classes()) {
    throw InputError("teacher shape does not match the task");
  }
  DistillResult out;
  out.targets = build_targets(teacher, task.train, policy, fgcr);
  auto model = init_mlp(network_widths(task, student_hidden), config.seed);
  const auto& targets = out.targets;
  run_sgd(model, task.train, config,
          [&](const Eigen::MatrixXd& logits, std::span<const std::size_t> batch) {
            const auto labels = gather(task.train.labels, batch);
            std::vector<Eigen::Index> cols(batch.begin(), batch.end());
            const Eigen::MatrixXd probs = targets.probs(Eigen::all, cols);
            const Eigen::VectorXd taus = targets.student_tau(cols);
            return distillation_loss(logits, labels, probs, taus, config.lambda);
          });
  out.student = finish(std::move(model), task);
  return out;
}

}  // namespace dkd::lab
