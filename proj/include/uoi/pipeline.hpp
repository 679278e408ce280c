#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uoi/admm.hpp"
#include "uoi/error.hpp"
#include "uoi/parallel.hpp"
#include "uoi/problem.hpp"
#include "uoi/resampling.hpp"
#include "uoi/support.hpp"
#include "uoi/timing.hpp"

namespace uoi {

/// Geometric regularization path from lambda_max down to epsilon * lambda_max.
struct LambdaGrid {
  std::vector<double> values;
  double lambda_max = 0.0;
  double epsilon = 0.0;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t j) const { return values[j]; }
};

inline LambdaGrid lambda_grid_from_max(double lambda_max, std::size_t q, double epsilon) {
  if (q < 1) throw InputError("lambda grid: q must be at least 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("lambda grid: epsilon must lie in (0, 1)");
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    throw InputError("lambda grid: lambda_max is zero; X or y is identically zero");
  }
  LambdaGrid grid;
  grid.lambda_max = lambda_max;
  grid.epsilon = epsilon;
  grid.values.resize(q);
  grid.values[0] = lambda_max;
  for (std::size_t j = 1; j < q; ++j) {
    grid.values[j] =
        lambda_max * std::pow(epsilon, static_cast<double>(j) / static_cast<double>(q - 1));
  }
  return grid;
}

/// Grid whose top value ||X'y||_inf zeroes the solution of the problem as given.
inline LambdaGrid lambda_grid(const RegressionProblem& problem, std::size_t q, double epsilon) {
  check_dimensions(problem.X, problem.y);
  const double lambda_max =
      problem.cols() > 0 ? (problem.X.transpose() * problem.y).cwiseAbs().maxCoeff() : 0.0;
  return lambda_grid_from_max(lambda_max, q, epsilon);
}

/// Regressors shared by one or more response columns.
///
/// With r responses and m regressors the coefficient vector has length m * r,
/// response c owning indices [c * m, (c + 1) * m). One response is ordinary
/// regression; several responses over one lag matrix is the column-decomposed
/// form of a vectorized VAR problem.
struct Design {
  MatrixXd X;  ///< n x m
  MatrixXd Y;  ///< n x r

  Index rows() const { return X.rows(); }
  Index features() const { return X.cols(); }
  Index responses() const { return Y.cols(); }
  Index coefficients() const { return X.cols() * Y.cols(); }

  static Design from_problem(const RegressionProblem& problem) {
    check_dimensions(problem.X, problem.y);
    return Design{problem.X, problem.y};
  }
};

/// Pipeline knobs beyond the bootstrap plan and solver settings.
struct UoiOptions {
  std::size_t q = 8;
  double lambda_min_ratio = 1e-3;
  bool intercept = true;
  double zero_tol = 1e-8;
  std::size_t workers = 1;        ///< 0 means all hardware threads
  std::size_t lambda_chunks = 1;  ///< contiguous grid segments solved as separate tasks

  void validate() const {
    if (q < 1) throw InputError("UoiOptions: q must be at least 1");
    if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
      throw InputError("UoiOptions: lambda_min_ratio must lie in (0, 1)");
    }
    if (!(zero_tol >= 0.0)) throw InputError("UoiOptions: zero_tol must be nonnegative");
    if (lambda_chunks < 1 || lambda_chunks > q) {
      throw InputError("UoiOptions: lambda_chunks must lie in [1, q]");
    }
  }
};

struct FitDiagnostics {
  std::size_t selection_solves = 0;
  std::size_t selection_nonconverged = 0;
  std::size_t estimation_solves = 0;
  std::size_t estimation_nonconverged = 0;
  /// (bootstrap, lambda index) pairs whose selection solve hit max_iter.
  std::vector<std::pair<std::size_t, std::size_t>> flagged_selection;

  friend bool operator==(const FitDiagnostics&, const FitDiagnostics&) = default;
};

/// Everything needed to reproduce a fit, apart from the data itself.
struct FitConfig {
  BootstrapPlan plan;
  UoiOptions options;
  AdmmSettings admm;
  std::string resampling = "row";  ///< "row" or "block"
  std::size_t block_len = 0;       ///< block length in effect; 0 for row resampling
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::size_t n_responses = 1;
};

struct UoiFit {
  VectorXd beta_star;  ///< length n_features * n_responses
  VectorXd intercept;  ///< one per response; zeros when disabled
  LambdaGrid grid;
  SupportFamily support_family;
  std::vector<std::size_t> chosen_index;  ///< best lambda index per estimation bootstrap
  std::vector<double> chosen_loss;
  MatrixXd losses;  ///< b2 x q held-out mean squared errors
  FitDiagnostics diagnostics;
  TimingBreakdown timing;
  FitConfig config;

  SupportSet support(double zero_tol = 0.0) const {
    return SupportSet::nonzeros(beta_star, zero_tol);
  }
  /// Supports chosen by each estimation bootstrap.
  std::vector<SupportSet> chosen_supports() const {
    std::vector<SupportSet> out;
    out.reserve(chosen_index.size());
    for (auto j : chosen_index) out.push_back(support_family[j]);
    return out;
  }
};

struct SelectionResult {
  SupportFamily family;
  std::vector<std::vector<SupportSet>> bootstrap_supports;  ///< b1 x q
  FitDiagnostics diagnostics;
  PhaseTiming timing;
};

namespace detail {

/// Subtracts column means in place and returns them.
inline Eigen::RowVectorXd center_columns(MatrixXd& m) {
  Eigen::RowVectorXd mean = m.colwise().mean();
  m.rowwise() -= mean;
  return mean;
}

/// [begin, end) of segment `c` when q values are cut into `chunks` segments.
inline std::pair<std::size_t, std::size_t> chunk_range(std::size_t q, std::size_t chunks,
                                                       std::size_t c) {
  const std::size_t base = q / chunks;
  const std::size_t extra = q % chunks;
  const std::size_t begin = c * base + std::min(c, extra);
  return {begin, begin + base + (c < extra ? 1 : 0)};
}

struct TaskTiming {
  double distribution_s = 0.0;
  double computation_s = 0.0;
};

/// Per-category wall-time estimate for a parallel region: summed task time
/// spread over the workers that actually ran.
inline void accumulate(PhaseTiming& phase, std::span<const TaskTiming> tasks,
                       std::size_t workers) {
  const double share = static_cast<double>(std::max<std::size_t>(
      1, std::min(resolve_workers(workers), tasks.size())));
  double dist = 0.0, comp = 0.0;
  for (const auto& t : tasks) {
    dist += t.distribution_s;
    comp += t.computation_s;
  }
  phase.distribution_s += dist / share;
  phase.computation_s += comp / share;
}

inline void check_design(const Design& design) {
  if (design.X.rows() != design.Y.rows()) {
    throw InputError("design: X has " + std::to_string(design.X.rows()) + " rows but Y has " +
                     std::to_string(design.Y.rows()));
  }
  if (design.rows() < 2) throw InputError("design: need at least 2 rows");
  if (design.features() < 1 || design.responses() < 1) {
    throw InputError("design: need at least one regressor and one response");
  }
}

inline double design_lambda_max(const Design& design, bool intercept) {
  if (!intercept) return (design.X.transpose() * design.Y).cwiseAbs().maxCoeff();
  MatrixXd X = design.X;
  MatrixXd Y = design.Y;
  center_columns(X);
  center_columns(Y);
  return (X.transpose() * Y).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Grid for a (possibly multi-response) design; centered when fitting an intercept.
inline LambdaGrid lambda_grid(const Design& design, std::size_t q, double epsilon,
                              bool intercept) {
  detail::check_design(design);
  return lambda_grid_from_max(detail::design_lambda_max(design, intercept), q, epsilon);
}

/// Model selection: bootstrap LASSO supports intersected per lambda.
///
/// Work items are (bootstrap k, grid segment) pairs. Within a segment the
/// solves are warm-started down the decreasing grid. Intersections run after
/// every item has finished, in ascending k.
template <class Resampler>
SelectionResult select(const Design& design, const LambdaGrid& grid, const Resampler& resampler,
                       const BootstrapPlan& plan, const AdmmSettings& settings,
                       const UoiOptions& options) {
  detail::check_design(design);
  plan.validate();
  settings.validate();
  options.validate();
  const std::size_t q = grid.size();
  if (q == 0) throw InputError("select: empty lambda grid");
  const std::size_t chunks = std::min(options.lambda_chunks, q);
  const Index m = design.features();
  const Index r = design.responses();

  SelectionResult out;
  Stopwatch phase_clock;
  // per (k, j): support indices and nonconvergence, per response
  std::vector<std::vector<std::vector<std::size_t>>> picked(
      plan.b1, std::vector<std::vector<std::size_t>>(q));
  std::vector<std::vector<char>> failed(plan.b1, std::vector<char>(q, 0));
  std::vector<detail::TaskTiming> task_time(plan.b1 * chunks);

  parallel_for(plan.b1 * chunks, options.workers, [&](std::size_t task) {
    const std::size_t k = task / chunks;
    const auto [begin, end] = detail::chunk_range(q, chunks, task % chunks);
    Stopwatch clock;
    const SampleIndices sample =
        resampler.selection(derive_seed(plan.master_seed, Phase::selection, k));
    MatrixXd X = gather_rows(design.X, sample.rows);
    MatrixXd Y = gather_rows(design.Y, sample.rows);
    if (options.intercept) {
      detail::center_columns(X);
      detail::center_columns(Y);
    }
    task_time[task].distribution_s = clock.seconds();
    clock.reset();

    const LassoAdmm solver(X, settings);
    for (Index c = 0; c < r; ++c) {
      const VectorXd y = Y.col(c);
      AdmmState warm;
      bool have_warm = false;
      for (std::size_t j = begin; j < end; ++j) {
        const AdmmResult res = solver.solve(y, grid[j], have_warm ? &warm : nullptr);
        if (!res.converged) failed[k][j] = 1;
        for (Index i = 0; i < m; ++i) {
          if (std::abs(res.beta[i]) > options.zero_tol) {
            picked[k][j].push_back(static_cast<std::size_t>(c * m + i));
          }
        }
        warm = res.state;
        have_warm = true;
      }
    }
    task_time[task].computation_s = clock.seconds();
  });
  detail::accumulate(out.timing, task_time, options.workers);

  Stopwatch reduce_clock;
  out.bootstrap_supports.resize(plan.b1);
  for (std::size_t k = 0; k < plan.b1; ++k) {
    out.bootstrap_supports[k].reserve(q);
    for (std::size_t j = 0; j < q; ++j) {
      out.bootstrap_supports[k].emplace_back(std::move(picked[k][j]));
      out.diagnostics.selection_solves += static_cast<std::size_t>(r);
      if (failed[k][j]) {
        ++out.diagnostics.selection_nonconverged;
        out.diagnostics.flagged_selection.emplace_back(k, j);
      }
    }
  }
  out.family.reserve(q);
  std::vector<SupportSet> column(plan.b1);
  for (std::size_t j = 0; j < q; ++j) {
    for (std::size_t k = 0; k < plan.b1; ++k) column[k] = out.bootstrap_supports[k][j];
    out.family.push_back(intersect_supports(column));
  }
  out.timing.reduction_s = reduce_clock.seconds();
  out.timing.total_s = phase_clock.seconds();
  return out;
}

/// Restricted least squares on the columns in `support`, scattered back to full length.
/// Zero vector for an empty support.
inline VectorXd ols_on_support(const RegressionProblem& problem, const SupportSet& support,
                               const AdmmSettings& settings = {}) {
  check_dimensions(problem.X, problem.y);
  support.check_bound(static_cast<std::size_t>(problem.cols()));
  VectorXd beta = VectorXd::Zero(problem.cols());
  if (support.empty()) return beta;
  const MatrixXd sub = gather_cols(problem.X, support.indices());
  const AdmmResult res = LassoAdmm(sub, settings).solve(problem.y, 0.0);
  for (std::size_t a = 0; a < support.size(); ++a) beta[static_cast<Index>(support[a])] = res.beta[static_cast<Index>(a)];
  return beta;
}

/// Mean squared prediction error (1/m)||y - X beta||^2 over the given rows.
inline double eval_loss(const Eigen::Ref<const VectorXd>& beta, const Eigen::Ref<const MatrixXd>& X,
                        const Eigen::Ref<const VectorXd>& y) {
  check_dimensions(X, y);
  if (y.size() == 0) throw InputError("eval_loss: empty evaluation set");
  if (beta.size() != X.cols()) throw InputError("eval_loss: beta length does not match X");
  return (y - X * beta).squaredNorm() / static_cast<double>(y.size());
}

inline double eval_loss(const Eigen::Ref<const VectorXd>& beta, const RegressionProblem& eval) {
  return eval_loss(beta, eval.X, eval.y);
}

/// Model estimation: per bootstrap, refit every support by OLS on a training
/// resample, keep the one with the lowest held-out loss, and average the kept
/// estimates over bootstraps.
///
/// Ties in loss go to the smaller support, then the smaller lambda index.
/// Averages divide by b2 and sum in ascending k.
template <class Resampler>
UoiFit estimate(const Design& design, const SupportFamily& family, const Resampler& resampler,
                const BootstrapPlan& plan, const AdmmSettings& settings,
                const UoiOptions& options) {
  detail::check_design(design);
  plan.validate();
  settings.validate();
  const std::size_t q = family.size();
  if (q == 0) throw InputError("estimate: empty support family");
  const Index m = design.features();
  const Index r = design.responses();
  const auto total = static_cast<std::size_t>(m * r);
  for (const auto& s : family) s.check_bound(total);
  const std::size_t chunks = std::clamp<std::size_t>(options.lambda_chunks, 1, q);

  UoiFit fit;
  Stopwatch phase_clock;
  std::vector<std::vector<VectorXd>> coef(plan.b2, std::vector<VectorXd>(q));
  std::vector<std::vector<VectorXd>> icpt(plan.b2, std::vector<VectorXd>(q));
  MatrixXd losses(static_cast<Index>(plan.b2), static_cast<Index>(q));
  std::vector<std::size_t> nonconverged(plan.b2 * chunks, 0);
  std::vector<detail::TaskTiming> task_time(plan.b2 * chunks);

  // Column indices of each response inside each support, computed once.
  std::vector<std::vector<std::vector<std::size_t>>> cols(
      q, std::vector<std::vector<std::size_t>>(static_cast<std::size_t>(r)));
  for (std::size_t j = 0; j < q; ++j) {
    for (auto idx : family[j]) {
      cols[j][idx / static_cast<std::size_t>(m)].push_back(idx % static_cast<std::size_t>(m));
    }
  }

  parallel_for(plan.b2 * chunks, options.workers, [&](std::size_t task) {
    const std::size_t k = task / chunks;
    const auto [begin, end] = detail::chunk_range(q, chunks, task % chunks);
    Stopwatch clock;
    const TrainEvalSplit split =
        resampler.estimation(derive_seed(plan.master_seed, Phase::estimation_train, k));
    MatrixXd Xt = gather_rows(design.X, split.train.rows);
    MatrixXd Yt = gather_rows(design.Y, split.train.rows);
    const MatrixXd Xe = gather_rows(design.X, split.eval.rows);
    const MatrixXd Ye = gather_rows(design.Y, split.eval.rows);
    Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(m);
    Eigen::RowVectorXd y_mean = Eigen::RowVectorXd::Zero(r);
    if (options.intercept) {
      x_mean = detail::center_columns(Xt);
      y_mean = detail::center_columns(Yt);
    }
    task_time[task].distribution_s = clock.seconds();
    clock.reset();

    const double denom = static_cast<double>(Xe.rows()) * static_cast<double>(r);
    for (std::size_t j = begin; j < end; ++j) {
      VectorXd beta = VectorXd::Zero(m * r);
      VectorXd mu = VectorXd::Zero(r);
      double sse = 0.0;
      for (Index c = 0; c < r; ++c) {
        const auto& sel = cols[j][static_cast<std::size_t>(c)];
        VectorXd resid = Ye.col(c);
        double mu_c = y_mean[c];
        if (!sel.empty()) {
          const MatrixXd sub = gather_cols(Xt, sel);
          const AdmmResult res = LassoAdmm(sub, settings).solve(Yt.col(c), 0.0);
          if (!res.converged) ++nonconverged[task];
          for (std::size_t a = 0; a < sel.size(); ++a) {
            const double b = res.beta[static_cast<Index>(a)];
            beta[c * m + static_cast<Index>(sel[a])] = b;
            mu_c -= x_mean[static_cast<Index>(sel[a])] * b;
            resid -= Xe.col(static_cast<Index>(sel[a])) * b;
          }
        }
        if (options.intercept) {
          mu[c] = mu_c;
          resid.array() -= mu_c;
        }
        sse += resid.squaredNorm();
      }
      coef[k][j] = std::move(beta);
      icpt[k][j] = std::move(mu);
      losses(static_cast<Index>(k), static_cast<Index>(j)) = sse / denom;
    }
    task_time[task].computation_s = clock.seconds();
  });
  detail::accumulate(fit.timing.estimation, task_time, options.workers);

  Stopwatch reduce_clock;
  fit.beta_star = VectorXd::Zero(m * r);
  fit.intercept = VectorXd::Zero(r);
  fit.chosen_index.resize(plan.b2);
  fit.chosen_loss.resize(plan.b2);
  for (std::size_t k = 0; k < plan.b2; ++k) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < q; ++j) {
      const double lj = losses(static_cast<Index>(k), static_cast<Index>(j));
      const double lb = losses(static_cast<Index>(k), static_cast<Index>(best));
      if (lj < lb || (lj == lb && family[j].size() < family[best].size())) best = j;
    }
    fit.chosen_index[k] = best;
    fit.chosen_loss[k] = losses(static_cast<Index>(k), static_cast<Index>(best));
    fit.beta_star += coef[k][best];
    fit.intercept += icpt[k][best];
  }
  fit.beta_star /= static_cast<double>(plan.b2);
  fit.intercept /= static_cast<double>(plan.b2);
  fit.timing.estimation.reduction_s = reduce_clock.seconds();
  fit.timing.estimation.total_s = phase_clock.seconds();

  fit.losses = std::move(losses);
  fit.support_family = family;
  fit.diagnostics.estimation_solves = plan.b2 * q * static_cast<std::size_t>(r);
  for (auto c : nonconverged) fit.diagnostics.estimation_nonconverged += c;
  fit.timing.workers = resolve_workers(options.workers);
  return fit;
}

/// Selection followed by estimation on fresh resamples of the same design.
template <class Resampler>
UoiFit fit_uoi(const Design& design, const Resampler& resampler, const BootstrapPlan& plan,
               const AdmmSettings& settings, const UoiOptions& options) {
  detail::check_design(design);
  plan.validate();
  settings.validate();
  options.validate();
  Stopwatch clock;
  const LambdaGrid grid =
      lambda_grid(design, options.q, options.lambda_min_ratio, options.intercept);
  const double grid_s = clock.seconds();

  SelectionResult selection = select(design, grid, resampler, plan, settings, options);
  selection.timing.distribution_s += grid_s;
  selection.timing.total_s += grid_s;

  UoiFit fit = estimate(design, selection.family, resampler, plan, settings, options);
  fit.grid = grid;
  fit.timing.selection = selection.timing;
  fit.diagnostics.selection_solves = selection.diagnostics.selection_solves;
  fit.diagnostics.selection_nonconverged = selection.diagnostics.selection_nonconverged;
  fit.diagnostics.flagged_selection = std::move(selection.diagnostics.flagged_selection);
  fit.config.plan = plan;
  fit.config.options = options;
  fit.config.admm = settings;
  fit.config.n_samples = static_cast<std::size_t>(design.rows());
  fit.config.n_features = static_cast<std::size_t>(design.features());
  fit.config.n_responses = static_cast<std::size_t>(design.responses());
  return fit;
}

inline RowResampler row_resampler(std::size_t n, const BootstrapPlan& plan) {
  return RowResampler{n, plan.subsample_fraction, plan.eval_fraction};
}

/// Selection phase on a single-response problem with i.i.d. row bootstraps.
inline SelectionResult select(const RegressionProblem& problem, const LambdaGrid& grid,
                              const BootstrapPlan& plan, const AdmmSettings& settings = {},
                              const UoiOptions& options = {}) {
  const Design design = Design::from_problem(problem);
  return select(design, grid, row_resampler(static_cast<std::size_t>(problem.rows()), plan), plan,
                settings, options);
}

inline UoiFit estimate(const RegressionProblem& problem, const SupportFamily& family,
                       const BootstrapPlan& plan, const AdmmSettings& settings = {},
                       const UoiOptions& options = {}) {
  const Design design = Design::from_problem(problem);
  return estimate(design, family, row_resampler(static_cast<std::size_t>(problem.rows()), plan),
                  plan, settings, options);
}

/// UoI-LASSO: sparse linear regression with i.i.d. row bootstraps.
inline UoiFit fit_uoi_lasso(const RegressionProblem& problem, const BootstrapPlan& plan = {},
                            const AdmmSettings& settings = {}, const UoiOptions& options = {}) {
  const Design design = Design::from_problem(problem);
  UoiFit fit = fit_uoi(design, row_resampler(static_cast<std::size_t>(problem.rows()), plan),
                       plan, settings, options);
  fit.config.resampling = "row";
  return fit;
}

/// Predictions X beta + intercept for a single-response fit.
inline VectorXd predict(const UoiFit& fit, const Eigen::Ref<const MatrixXd>& X) {
  if (X.cols() != fit.beta_star.size()) throw InputError("predict: column count mismatch");
  VectorXd out = X * fit.beta_star;
  if (fit.intercept.size() > 0) out.array() += fit.intercept[0];
  return out;
}

}  // namespace uoi
