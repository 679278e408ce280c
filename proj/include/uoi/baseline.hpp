#pragma once

#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "uoi/admm.hpp"
#include "uoi/pipeline.hpp"

namespace uoi {

struct LassoCvFit {
  VectorXd beta;
  double intercept = 0.0;
  double lambda = 0.0;
  std::size_t lambda_index = 0;
  std::vector<double> cv_loss;  ///< mean held-out MSE per grid value
};

/// Single LASSO with lambda chosen by K-fold cross-validation over the same
/// geometric grid UoI uses; the reference point for selection and prediction
/// comparisons. Folds are contiguous row ranges; the intercept is fit by
/// centering.
inline LassoCvFit fit_lasso_cv(const RegressionProblem& problem, std::size_t q, double epsilon,
                               std::size_t folds = 5, const AdmmSettings& settings = {}) {
  check_dimensions(problem.X, problem.y);
  const auto n = static_cast<std::size_t>(problem.rows());
  if (folds < 2 || folds > n) throw InputError("fit_lasso_cv: folds must lie in [2, n]");
  const Design full = Design::from_problem(problem);
  const LambdaGrid grid = lambda_grid(full, q, epsilon, /*intercept=*/true);

  auto path_fit = [&](const MatrixXd& X_raw, const VectorXd& y_raw) {
    MatrixXd X = X_raw;
    VectorXd y = y_raw;
    const Eigen::RowVectorXd xm = X.colwise().mean();
    const double ym = y.mean();
    X.rowwise() -= xm;
    y.array() -= ym;
    const LassoAdmm solver(X, settings);
    std::vector<std::pair<VectorXd, double>> out;
    AdmmState warm;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const AdmmResult res = solver.solve(y, grid[j], j > 0 ? &warm : nullptr);
      warm = res.state;
      out.emplace_back(res.beta, ym - xm.dot(res.beta));
    }
    return out;
  };

  LassoCvFit fit;
  fit.cv_loss.assign(grid.size(), 0.0);
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t lo = f * n / folds;
    const std::size_t hi = (f + 1) * n / folds;
    std::vector<std::size_t> train, test;
    for (std::size_t r = 0; r < n; ++r) (r >= lo && r < hi ? test : train).push_back(r);
    const auto path = path_fit(gather_rows(problem.X, train), gather_rows(problem.y, train));
    const MatrixXd Xt = gather_rows(problem.X, test);
    const VectorXd yt = gather_rows(problem.y, test);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      VectorXd resid = yt - Xt * path[j].first;
      resid.array() -= path[j].second;
      fit.cv_loss[j] += resid.squaredNorm() / static_cast<double>(n);
    }
  }
  fit.lambda_index = static_cast<std::size_t>(
      std::min_element(fit.cv_loss.begin(), fit.cv_loss.end()) - fit.cv_loss.begin());
  fit.lambda = grid[fit.lambda_index];
  const auto path = path_fit(problem.X, problem.y);
  fit.beta = path[fit.lambda_index].first;
  fit.intercept = path[fit.lambda_index].second;
  return fit;
}

/// Coefficient of determination of predictions against observed values.
inline double r_squared(const Eigen::Ref<const VectorXd>& observed,
                        const Eigen::Ref<const VectorXd>& predicted) {
  if (observed.size() != predicted.size() || observed.size() == 0) {
    throw InputError("r_squared: length mismatch or empty input");
  }
  const double sst = (observed.array() - observed.mean()).square().sum();
  const double sse = (observed - predicted).squaredNorm();
  return sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
}

}  // namespace uoi
