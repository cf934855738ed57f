#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dkd/lab/loss.hpp"
#include "dkd/lab/mlp.hpp"
#include "dkd/lab/task.hpp"
#include "dkd/temperature_policy.hpp"

namespace dkd::lab {

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double lambda = 0.9;  ///< KD mixing weight
  double beta = 0.0;    ///< RegT coefficient
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);

struct TrainedModel {
  MlpModel model;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  double final_loss = 0.0;
};

/// Batch loss over the logits of the samples at `batch` (indices into the
/// training set).
using BatchLoss =
    std::function<LossResult(const Eigen::MatrixXd& logits, std::span<const std::size_t> batch)>;

/// Mini-batch SGD with heavy-ball momentum (v = mu v + g; w -= lr v).
/// Reshuffles every epoch from `config.seed`. Throws RunError naming the
/// epoch if the loss stops being finite.
void run_sgd(MlpModel& model, const Dataset& train, const TrainConfig& config,
             const BatchLoss& loss);

/// Full hidden-layer widths for a task: {input, hidden..., classes}.
std::vector<std::size_t> network_widths(const GroupTask& task,
                                        std::span<const std::size_t> hidden);

double accuracy(const MlpModel& model, const Dataset& data);

/// Cross-entropy teacher, or the RegT objective when `regt_beta` is set.
TrainedModel train_teacher(const GroupTask& task, std::span<const std::size_t> hidden,
                           const TrainConfig& config, std::optional<double> regt_beta = {});

struct FgcrOptions {
  double alpha = 0.5;
  std::optional<double> tau0;  ///< default: tau - 1, floored at 1
};

/// Per-sample teacher targets and the student-side temperature for each sample.
struct DistillTargets {
  Eigen::MatrixXd probs;  ///< C x n
  Eigen::VectorXd student_tau;
  std::vector<double> chosen_tau;  ///< ISATS search result per sample (empty otherwise)
};

/// Teacher targets on the training set under `policy`, optionally fused with
/// class priors (FGCR requires a TS policy). ISATS temperatures are searched
/// once here since the teacher is frozen.
DistillTargets build_targets(const MlpModel& teacher, const Dataset& train,
                             const TemperaturePolicy& policy,
                             const std::optional<FgcrOptions>& fgcr = {});

struct DistillResult {
  TrainedModel student;
  DistillTargets targets;
};

DistillResult distill(const MlpModel& teacher, std::span<const std::size_t> student_hidden,
                      const GroupTask& task, const TrainConfig& config,
                      const TemperaturePolicy& policy,
                      const std::optional<FgcrOptions>& fgcr = {});

/// Plain cross-entropy training of a fresh network; the λ=0 limit of distill.
TrainedModel train_plain(const GroupTask& task, std::span<const std::size_t> hidden,
                         const TrainConfig& config);

}  // namespace dkd::lab
