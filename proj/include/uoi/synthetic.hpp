#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>

#include "uoi/error.hpp"
#include "uoi/problem.hpp"
#include "uoi/resampling.hpp"
#include "uoi/support.hpp"

namespace uoi {

struct GroundTruth {
  VectorXd beta_true;
  SupportSet support_true;
  double noise_sigma = 0.0;
};

/// y = X beta + eps with standard Gaussian X and a k-sparse beta.
///
/// Nonzero positions are uniform without replacement; magnitudes are uniform
/// in [0.5, 1.5] * beta_scale with random signs; eps ~ N(0, noise_sigma^2).
inline std::pair<RegressionProblem, GroundTruth> generate_regression(
    std::size_t n, std::size_t p, std::size_t k_nonzero, double noise_sigma, double beta_scale,
    std::uint64_t seed) {
  if (n < 1 || p < 1) throw InputError("generate_regression: n and p must be positive");
  if (k_nonzero < 1 || k_nonzero > p) {
    throw InputError("generate_regression: k_nonzero must lie in [1, p]");
  }
  if (!(noise_sigma >= 0.0)) throw InputError("generate_regression: noise_sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> magnitude(0.5, 1.5);
  std::bernoulli_distribution negative(0.5);

  GroundTruth truth;
  truth.noise_sigma = noise_sigma;
  truth.beta_true = VectorXd::Zero(static_cast<Index>(p));
  std::vector<std::size_t> support = detail::choose_distinct(p, k_nonzero, rng);
  for (auto i : support) {
    truth.beta_true[static_cast<Index>(i)] =
        (negative(rng) ? -1.0 : 1.0) * magnitude(rng) * beta_scale;
  }
  truth.support_true = SupportSet(std::move(support));

  RegressionProblem problem;
  problem.X.resize(static_cast<Index>(n), static_cast<Index>(p));
  for (Index r = 0; r < problem.X.rows(); ++r)
    for (Index c = 0; c < problem.X.cols(); ++c) problem.X(r, c) = normal(rng);
  problem.y = problem.X * truth.beta_true;
  if (noise_sigma > 0.0) {
    for (Index r = 0; r < problem.y.size(); ++r) problem.y[r] += noise_sigma * normal(rng);
  }
  problem.beta_true = truth.beta_true;
  return {std::move(problem), std::move(truth)};
}

}  // namespace uoi
