#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace dkd::lab {

// Batch losses over column-wise logits (C x n). Each returns the batch-mean
// loss and its gradient with respect to the logits.

struct LossResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_logits;
};

/// Column-wise softmax of logits / tau.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits, double tau = 1.0);

LossResult cross_entropy_loss(const Eigen::MatrixXd& logits, std::span<const std::size_t> labels);

/// -(1 - lambda) log p_y(1) - lambda * tau^2 * sum_c t_c log p_c(tau), where
/// `targets` holds the teacher distribution per column and `student_tau`
/// the student-side temperature per column.
LossResult distillation_loss(const Eigen::MatrixXd& logits, std::span<const std::size_t> labels,
                             const Eigen::MatrixXd& targets, const Eigen::VectorXd& student_tau,
                             double lambda);

/// Cross-entropy plus beta * (p_y - std(q)) at temperature 1.
LossResult regt_loss(const Eigen::MatrixXd& logits, std::span<const std::size_t> labels,
                     double beta);

}  // namespace dkd::lab
