#include "dkd/probability.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "dkd/error.hpp"
#include "support/oracles.hpp"

using namespace dkd;

TEST(soften, uniform_logits_give_uniform_probabilities) {
  const auto p = soften(Vector{1, 1, 1, 1}, 1.0);
  for (double v : p.probs) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(soften, shift_invariance) {
  const Vector f{0.3, -1.2, 2.5, 0.0};
  Vector shifted;
  for (double v : f) shifted.push_back(v + 17.0);
  const auto a = soften(f, 2.5);
  const auto b = soften(shifted, 2.5);
  for (std::size_t c = 0; c < f.size(); ++c) EXPECT_NEAR(a.probs[c], b.probs[c], 1e-15);
}

TEST(soften, matches_scalar_evaluation) {
  // Direct evaluation: exp(1), exp(0.5), exp(0) normalised.
  const auto p = soften(Vector{2, 1, 0}, 2.0);
  EXPECT_NEAR(p.probs[0], 0.506, 1e-3);
  EXPECT_NEAR(p.probs[1], 0.307, 1e-3);
  EXPECT_NEAR(p.probs[2], 0.186, 1e-3);
  const auto naive = oracle::naive_softmax({2, 1, 0}, 2.0);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(p.probs[c], naive[c], 1e-15);
}

TEST(soften, large_logits_stay_finite) {
  const auto p = soften(Vector{1000.0, 999.0, -1000.0}, 1.0);
  EXPECT_NEAR(p.probs[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_GT(p.probs[2], 0.0 - 1e-300);
}

TEST(soften, rejects_bad_temperature_and_logits) {
  EXPECT_THROW(soften(Vector{1, 2}, 0.0), DomainError);
  EXPECT_THROW(soften(Vector{1, 2}, -1.0), DomainError);
  EXPECT_THROW(soften(Vector{1, NAN}, 1.0), InputError);
  EXPECT_THROW(soften(Vector{1, INFINITY}, 1.0), InputError);
}

TEST(soften, fuzz_normalised_positive_argmax_preserved) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> classes(2, 40);
  std::uniform_real_distribution<double> log_tau(std::log(0.1), std::log(100.0));
  for (int trial = 0; trial < 2000; ++trial) {
    const auto f = oracle::random_logits(rng, classes(rng), 4.0);
    const double tau = std::exp(log_tau(rng));
    const auto p = soften(f, tau);
    const double total = std::accumulate(p.probs.begin(), p.probs.end(), 0.0);
    ASSERT_NEAR(total, 1.0, 1e-9);
    for (double v : p.probs) ASSERT_GT(v, 0.0);
    ASSERT_EQ(argmax(p.probs), argmax(f));
  }
}

TEST(soften, higher_temperature_shrinks_the_spread) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 500; ++trial) {
    const auto f = oracle::random_logits(rng, 2 + trial % 20);
    double prev_gap = 2.0;
    for (double tau : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      const auto p = soften(f, tau);
      const auto [lo, hi] = std::minmax_element(p.probs.begin(), p.probs.end());
      const double gap = *hi - *lo;
      ASSERT_LT(gap, prev_gap) << "tau=" << tau;
      prev_gap = gap;
    }
  }
}

TEST(split_gt, removes_the_label_position) {
  const LogitRecord r0{"a", 0, {0.0, 0.0, 0.0}};
  const auto v0 = split_gt(r0, {{0.5, 0.3, 0.2}});
  EXPECT_EQ(v0.gt_prob, 0.5);
  EXPECT_EQ(v0.non_gt_probs, (Vector{0.3, 0.2}));

  const LogitRecord r2{"b", 2, {0.0, 0.0, 0.0}};
  const auto v2 = split_gt(r2, {{0.3, 0.2, 0.5}});
  EXPECT_EQ(v2.gt_prob, 0.5);
  EXPECT_EQ(v2.non_gt_probs, (Vector{0.3, 0.2}));

  const LogitRecord r1{"c", 1, {3, 5, 1}};
  const auto v1 = split_gt(r1, soften(r1.logits, 1.0));
  EXPECT_EQ(v1.gt_logit, 5.0);
  EXPECT_EQ(v1.non_gt_logits, (Vector{3, 1}));
  EXPECT_NEAR(v1.gt_prob + std::accumulate(v1.non_gt_probs.begin(), v1.non_gt_probs.end(), 0.0),
              1.0, 1e-12);
}

TEST(split_gt, length_mismatch_is_an_input_error) {
  const LogitRecord r{"a", 0, {1, 2, 3}};
  EXPECT_THROW(split_gt(r, {{0.5, 0.5}}), InputError);
  EXPECT_THROW(split_gt({"bad", 3, {1, 2, 3}}, {{0.2, 0.3, 0.5}}), InputError);
}

TEST(dispersion, population_statistics) {
  const auto flat = dispersion(Vector{0.2, 0.2, 0.2});
  EXPECT_NEAR(flat.variance, 0.0, 1e-30);
  EXPECT_NEAR(flat.std, 0.0, 1e-15);

  const auto two = dispersion(Vector{0.1, 0.3});
  EXPECT_NEAR(two.variance, 0.01, 1e-15);
  EXPECT_NEAR(two.std, 0.1, 1e-15);

  const auto four = dispersion(Vector{0.0, 0.0, 0.3, 0.3});
  EXPECT_NEAR(four.variance, 0.0225, 1e-15);
  EXPECT_NEAR(four.std, 0.15, 1e-15);

  EXPECT_DOUBLE_EQ(dispersion(Vector{42.0}).variance, 0.0);
  EXPECT_THROW(dispersion(Vector{}), InputError);
}

TEST(dispersion, larger_target_logit_means_less_varied_non_gt) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    auto f = oracle::random_logits(rng, 2 + trial % 30);
    const std::size_t label = static_cast<std::size_t>(trial) % f.size();
    double prev = INFINITY;
    for (int step = 0; step < 10; ++step) {
      f[label] = -2.0 + 1.5 * step;
      const double sd = non_gt_std(soften(f, 4.0).probs, label);
      if (f.size() > 2) {
        ASSERT_LT(sd, prev);
      }
      prev = sd;
    }
  }
}
