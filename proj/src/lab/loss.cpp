#include "dkd/lab/loss.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dkd/adjustment.hpp"
#include "dkd/error.hpp"

namespace dkd::lab {

namespace {

void check_labels(const Eigen::MatrixXd& logits, std::span<const std::size_t> labels) {
  if (static_cast<std::size_t>(logits.cols()) != labels.size()) {
    throw InputError(fmt::format("{} logit columns for {} labels", logits.cols(), labels.size()));
  }
  for (std::size_t y : labels) {
    if (y >= static_cast<std::size_t>(logits.rows())) {
      throw InputError(fmt::format("label {} out of range for {} classes", y, logits.rows()));
    }
  }
}

// log-softmax of one column at temperature tau.
Eigen::VectorXd log_softmax(const Eigen::VectorXd& z, double tau) {
  const Eigen::VectorXd scaled = z / tau;
  const double top = scaled.maxCoeff();
  const double log_norm = top + std::log((scaled.array() - top).exp().sum());
  return scaled.array() - log_norm;
}

}  // namespace

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits, double tau) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    out.col(j) = log_softmax(logits.col(j), tau).array().exp();
  }
  return out;
}

LossResult cross_entropy_loss(const Eigen::MatrixXd& logits, std::span<const std::size_t> labels) {
  check_labels(logits, labels);
  const auto n = static_cast<double>(labels.size());
  LossResult out;
  out.grad_logits.resize(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(j)]);
    const Eigen::VectorXd logp = log_softmax(logits.col(j), 1.0);
    out.loss -= logp(y);
    out.grad_logits.col(j) = logp.array().exp();
    out.grad_logits(y, j) -= 1.0;
  }
  out.loss /= n;
  out.grad_logits /= n;
  return out;
}

LossResult distillation_loss(const Eigen::MatrixXd& logits, std::span<const std::size_t> labels,
                             const Eigen::MatrixXd& targets, const Eigen::VectorXd& student_tau,
                             double lambda) {
  check_labels(logits, labels);
  if (targets.rows() != logits.rows() || targets.cols() != logits.cols() ||
      student_tau.size() != logits.cols()) {
    throw InputError("distillation_loss: target shape does not match the logits");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError(fmt::format("KD mixing weight must lie in [0, 1], got {}", lambda));
  }
  const auto n = static_cast<double>(labels.size());
  LossResult out;
  out.grad_logits.resize(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(j)]);
    const double tau = student_tau(j);
    const Eigen::VectorXd logp1 = log_softmax(logits.col(j), 1.0);
    const Eigen::VectorXd logpt = log_softmax(logits.col(j), tau);
    const double target_mass = targets.col(j).sum();

    const double hard = -logp1(y);
    const double soft = -tau * tau * targets.col(j).dot(logpt);
    out.loss += (1.0 - lambda) * hard + lambda * soft;

    Eigen::VectorXd hard_grad = logp1.array().exp();
    hard_grad(y) -= 1.0;
    // d/dz of -tau^2 sum t log softmax(z/tau) = tau * (softmax(z/tau) * sum(t) - t)
    const Eigen::VectorXd soft_grad =
        tau * (logpt.array().exp() * target_mass - targets.col(j).array()).matrix();
    out.grad_logits.col(j) = (1.0 - lambda) * hard_grad + lambda * soft_grad;
  }
  out.loss /= n;
  out.grad_logits /= n;
  return out;
}

LossResult regt_loss(const Eigen::MatrixXd& logits, std::span<const std::size_t> labels,
                     double beta) {
  auto out = cross_entropy_loss(logits, labels);
  if (beta == 0.0) return out;
  const auto n = static_cast<double>(labels.size());
  double penalty = 0.0;
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const auto y = labels[static_cast<std::size_t>(j)];
    const Eigen::VectorXd p = log_softmax(logits.col(j), 1.0).array().exp();
    const std::span<const double> probs(p.data(), static_cast<std::size_t>(p.size()));
    penalty += p(static_cast<Eigen::Index>(y)) - non_gt_std(probs, y);
    // Chain through the softmax Jacobian: dR/dz_k = p_k (g_k - sum_j g_j p_j).
    const auto g = regt_penalty_prob_gradient(probs, y);
    const Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(g.size()));
    const double mean_g = gv.dot(p);
    out.grad_logits.col(j) += (beta / n) * (p.array() * (gv.array() - mean_g)).matrix();
  }
  out.loss += beta * penalty / n;
  return out;
}

}  // namespace dkd::lab
