#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "dkd/error.hpp"
#include "dkd/lab/loss.hpp"
#include "dkd/lab/mlp.hpp"
#include "support/gradient_check.hpp"

using namespace dkd;
using namespace dkd::lab;

namespace {

struct Case {
  const char* name;
  oracle::LossOfLogits loss;
};

}  // namespace

TEST(gradients, backprop_matches_central_differences) {
  std::mt19937_64 rng(61);
  for (int config = 0; config < 20; ++config) {
    const auto problem = oracle::random_problem(rng, config);
    std::vector<Case> cases{{"ce", [&](const Eigen::MatrixXd& z) {
                               return cross_entropy_loss(z, problem.labels);
                             }},
                            {"regt", [&](const Eigen::MatrixXd& z) {
                               return regt_loss(z, problem.labels, 0.01);
                             }}};
    for (double lambda : {0.0, 0.5, 1.0}) {
      for (double tau : {1.0, 4.0}) {
        cases.push_back({"kd", [&problem, lambda, tau](const Eigen::MatrixXd& z) {
                           const Eigen::VectorXd taus = Eigen::VectorXd::Constant(z.cols(), tau);
                           return distillation_loss(z, problem.labels, problem.targets, taus, lambda);
                         }});
      }
    }
    for (const auto& c : cases) {
      const double err = oracle::max_relative_gradient_error(problem.model, problem.inputs, c.loss);
      ASSERT_LE(err, 1e-4) << c.name << " config " << config;
    }
  }
}

TEST(gradients, per_sample_student_temperatures) {
  std::mt19937_64 rng(62);
  const auto problem = oracle::random_problem(rng, 3);
  Eigen::VectorXd taus(problem.inputs.cols());
  for (Eigen::Index j = 0; j < taus.size(); ++j) taus(j) = 1.0 + static_cast<double>(j % 7);
  const double err = oracle::max_relative_gradient_error(
      problem.model, problem.inputs, [&](const Eigen::MatrixXd& z) {
        return distillation_loss(z, problem.labels, problem.targets, taus, 0.7);
      });
  EXPECT_LE(err, 1e-4);
}

TEST(distillation_loss, zero_lambda_is_cross_entropy_bit_for_bit) {
  std::mt19937_64 rng(63);
  const auto problem = oracle::random_problem(rng, 5);
  const auto z = forward_batch(problem.model, problem.inputs).logits();
  const auto ce = cross_entropy_loss(z, problem.labels);
  const auto kd = distillation_loss(z, problem.labels, problem.targets,
                                    Eigen::VectorXd::Constant(z.cols(), 4.0), 0.0);
  EXPECT_EQ(ce.loss, kd.loss);
  EXPECT_EQ(ce.grad_logits, kd.grad_logits);
}

TEST(distillation_loss, one_hot_targets_reduce_to_cross_entropy_on_teacher_argmax) {
  std::mt19937_64 rng(64);
  std::normal_distribution<double> unit(0.0, 2.0);
  Eigen::MatrixXd z(6, 10), teacher(6, 10);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    z.data()[i] = unit(rng);
    teacher.data()[i] = unit(rng);
  }
  Eigen::MatrixXd one_hot = Eigen::MatrixXd::Zero(6, 10);
  std::vector<std::size_t> teacher_argmax, labels(10, 0);
  for (Eigen::Index j = 0; j < 10; ++j) {
    Eigen::Index best = 0;
    teacher.col(j).maxCoeff(&best);
    one_hot(best, j) = 1.0;
    teacher_argmax.push_back(static_cast<std::size_t>(best));
  }
  const auto kd = distillation_loss(z, labels, one_hot, Eigen::VectorXd::Ones(10), 1.0);
  const auto ce = cross_entropy_loss(z, teacher_argmax);
  EXPECT_NEAR(kd.loss, ce.loss, 1e-12);
  EXPECT_LE((kd.grad_logits - ce.grad_logits).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(distillation_loss, tau_squared_factor_on_a_one_parameter_probe) {
  // logits = w u. With the teacher's logits scaled alongside, the targets at
  // (w, tau=1) and (tau w, tau) coincide, so the tau^2 factor times the 1/tau
  // from the chain rule must make the slope exactly tau times larger.
  const Eigen::VectorXd u = (Eigen::VectorXd(5) << 1.0, -0.5, 2.0, 0.3, -1.2).finished();
  const Eigen::VectorXd teacher = (Eigen::VectorXd(5) << 0.4, 1.1, -0.7, 2.2, 0.0).finished();
  const std::vector<std::size_t> labels{3};
  const auto loss_at = [&](double w, double tau) {
    const Eigen::MatrixXd targets = softmax_columns(teacher, 1.0);
    return distillation_loss(w * u, labels, targets, Eigen::VectorXd::Constant(1, tau), 1.0);
  };
  const auto slope_fd = [&](double w, double tau) {
    const double h = 1e-5;
    return (loss_at(w + h, tau).loss - loss_at(w - h, tau).loss) / (2.0 * h);
  };
  const double w0 = 0.8;
  for (double tau : {2.0, 3.0, 4.0}) {
    const double base = slope_fd(w0, 1.0);
    const double scaled = slope_fd(tau * w0, tau);
    EXPECT_NEAR(scaled / base, tau * tau * (1.0 / tau), 1e-6);
    const double analytic = u.dot(loss_at(tau * w0, tau).grad_logits.col(0));
    EXPECT_NEAR(analytic, scaled, 1e-8 * std::max(1.0, std::abs(scaled)));
  }
}

TEST(distillation_loss, vanishes_at_the_teachers_own_parameters) {
  std::mt19937_64 rng(65);
  const auto problem = oracle::random_problem(rng, 7);
  const auto cache = forward_batch(problem.model, problem.inputs);
  for (double tau : {1.0, 2.0, 4.0}) {
    const Eigen::MatrixXd targets = softmax_columns(cache.logits(), tau);
    const auto kd = distillation_loss(cache.logits(), problem.labels, targets,
                                      Eigen::VectorXd::Constant(cache.logits().cols(), tau), 1.0);
    const auto grad = backward(problem.model, cache, kd.grad_logits);
    double norm = 0.0;
    for (const auto& w : grad.weights) norm += w.squaredNorm();
    for (const auto& b : grad.biases) norm += b.squaredNorm();
    EXPECT_LE(std::sqrt(norm), 1e-12) << "tau " << tau;
  }
}

TEST(distillation_loss, rejects_bad_shapes_and_lambda) {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 2);
  const std::vector<std::size_t> labels{0, 1};
  const Eigen::VectorXd taus = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(distillation_loss(z, labels, Eigen::MatrixXd::Zero(3, 1), taus, 0.5), InputError);
  EXPECT_THROW(distillation_loss(z, labels, z, taus, 1.5), ConfigError);
  EXPECT_THROW(cross_entropy_loss(z, std::vector<std::size_t>{0, 3}), InputError);
}
