#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uoi/error.hpp"
#include "uoi/parallel.hpp"
#include "uoi/problem.hpp"

namespace uoi {

/// Hyperparameters of the ADMM LASSO solver.
struct AdmmSettings {
  double rho = 1.0;          ///< augmented-Lagrangian penalty
  double abs_tol = 1e-6;
  double rel_tol = 1e-5;
  int max_iter = 5000;
  double relaxation = 1.0;   ///< over-relaxation factor, in [1, 2)
  bool adaptive_rho = false; ///< rebalance rho when residuals differ by more than 10x
  bool polish = true;        ///< refine the final iterate on its active set

  void validate() const {
    if (!(rho > 0.0)) throw InputError("AdmmSettings: rho must be positive");
    if (!(abs_tol > 0.0)) throw InputError("AdmmSettings: abs_tol must be positive");
    if (!(rel_tol > 0.0)) throw InputError("AdmmSettings: rel_tol must be positive");
    if (max_iter < 1) throw InputError("AdmmSettings: max_iter must be at least 1");
    if (!(relaxation >= 1.0 && relaxation < 2.0)) {
      throw InputError("AdmmSettings: relaxation must lie in [1, 2)");
    }
  }
};

/// KKT tolerance used by certificates on the unnormalized gradient scale.
inline constexpr double kKktTolerance = 1e-4;

/// Primal, split and scaled dual iterates; used for warm starts.
struct AdmmState {
  VectorXd x;
  VectorXd z;
  VectorXd u;
  double rho = 0.0;  ///< penalty u is scaled by; 0 means the settings' rho
};

struct AdmmResult {
  VectorXd beta;  ///< consensus variable z at termination (after polishing, if accepted)
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  bool converged = false;
  double objective = 0.0;
  bool polished = false;
  double rho = 1.0;  ///< penalty in effect at termination
  AdmmState state;
};

/// Elementwise shrinkage sign(v) * max(|v| - kappa, 0).
inline VectorXd soft_threshold(const Eigen::Ref<const VectorXd>& v, double kappa) {
  return v.unaryExpr([kappa](double a) {
    if (a > kappa) return a - kappa;
    if (a < -kappa) return a + kappa;
    return 0.0;
  });
}

/// 1/2 ||y - X beta||^2 + lambda ||beta||_1
inline double objective(const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& y,
                        double lambda, const Eigen::Ref<const VectorXd>& beta) {
  check_dimensions(X, y);
  if (beta.size() != X.cols()) {
    throw InputError("objective: beta has " + std::to_string(beta.size()) + " entries, X has " +
                     std::to_string(X.cols()) + " columns");
  }
  return 0.5 * (y - X * beta).squaredNorm() + lambda * beta.lpNorm<1>();
}

inline double objective(const RegressionProblem& problem, double lambda,
                        const Eigen::Ref<const VectorXd>& beta) {
  return objective(problem.X, problem.y, lambda, beta);
}

/// Largest violation of the LASSO optimality conditions at `beta`:
/// |g_i - lambda sign(beta_i)| on the support and max(|g_i| - lambda, 0) off it,
/// where g = X'(y - X beta).
inline double kkt_violation(const Eigen::Ref<const MatrixXd>& X,
                            const Eigen::Ref<const VectorXd>& y, double lambda,
                            const Eigen::Ref<const VectorXd>& beta) {
  check_dimensions(X, y);
  const VectorXd g = X.transpose() * (y - X * beta);
  double worst = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    const double v = beta[i] != 0.0 ? std::abs(g[i] - lambda * (beta[i] > 0 ? 1.0 : -1.0))
                                     : std::max(std::abs(g[i]) - lambda, 0.0);
    worst = std::max(worst, v);
  }
  return worst;
}

/// Cached solver for (X'X + rho I) x = b.
///
/// Tall designs (n >= p) keep the Gram matrix and its Cholesky factor. Wide
/// designs keep X and factor (X X' / rho + I), applying the Woodbury identity.
/// Either way the factor is built once per (X, rho) and reused for every
/// iteration and every warm-started lambda.
class NormalFactorization {
 public:
  NormalFactorization(const Eigen::Ref<const MatrixXd>& X, double rho)
      : rows_(X.rows()), cols_(X.cols()), tall_(X.rows() >= X.cols()) {
    if (tall_) {
      gram_ = MatrixXd(cols_, cols_).setZero().selfadjointView<Eigen::Lower>().rankUpdate(
          X.transpose());
      gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
    } else {
      wide_x_ = X;
      outer_ = MatrixXd(rows_, rows_).setZero().selfadjointView<Eigen::Lower>().rankUpdate(X);
      outer_.triangularView<Eigen::StrictlyUpper>() = outer_.transpose();
    }
    refactor(rho);
  }

  /// Rebuilds the Cholesky factor for a new penalty; the Gram/outer product is kept.
  void refactor(double rho) {
    rho_ = rho;
    if (tall_) {
      MatrixXd m = gram_;
      m.diagonal().array() += rho;
      llt_.compute(m);
    } else {
      MatrixXd m = outer_ / rho;
      m.diagonal().array() += 1.0;
      llt_.compute(m);
    }
  }

  VectorXd solve(const VectorXd& rhs) const {
    if (tall_) return llt_.solve(rhs);
    const VectorXd t = llt_.solve(wide_x_ * rhs);
    return rhs / rho_ - wide_x_.transpose() * t / (rho_ * rho_);
  }

  double rho() const noexcept { return rho_; }
  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  bool tall() const noexcept { return tall_; }
  /// X'X; only available for tall designs.
  const MatrixXd& gram() const noexcept { return gram_; }

 private:
  Index rows_;
  Index cols_;
  bool tall_;
  double rho_ = 1.0;
  MatrixXd gram_;
  MatrixXd wide_x_;
  MatrixXd outer_;
  Eigen::LLT<MatrixXd> llt_;
};

namespace detail {

inline double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

/// Normal-equation pieces restricted to an active set, from whichever sources
/// the caller has (a Gram matrix, or raw X). The consensus solver sums them
/// across shards.
struct ActiveSetSystem {
  virtual ~ActiveSetSystem() = default;
  virtual MatrixXd gram_block(std::span<const Index> active) const = 0;
  /// g = X'y - X'X_S beta_S over all p coordinates.
  virtual VectorXd gradient(std::span<const Index> active, const VectorXd& beta_active) const = 0;
};

/// Exact solution on the active set of an approximate minimizer.
///
/// Solves the reduced optimality system X_S'X_S b = X_S'y - lambda s, drops
/// coordinates whose sign disagrees and adds violators, for a few rounds.
/// Returns nothing if the reduced system is singular or no consistent active
/// set is found.
inline std::optional<VectorXd> polish(const ActiveSetSystem& system, const VectorXd& Xty,
                                      double lambda, const VectorXd& start) {
  const Index p = start.size();
  std::vector<Index> active;
  std::vector<double> signs;
  for (Index i = 0; i < p; ++i) {
    if (start[i] != 0.0) {
      active.push_back(i);
      signs.push_back(sign_of(start[i]));
    }
  }
  const double scale = 1.0 + (p > 0 ? Xty.cwiseAbs().maxCoeff() : 0.0);
  const double tol = 1e-10 * scale;
  constexpr int kRounds = 8;
  for (int round = 0; round < kRounds; ++round) {
    VectorXd b(static_cast<Index>(active.size()));
    if (!active.empty()) {
      const MatrixXd g = system.gram_block(active);
      Eigen::LLT<MatrixXd> llt(g);
      if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) return std::nullopt;
      VectorXd rhs(b.size());
      for (std::size_t a = 0; a < active.size(); ++a) {
        rhs[static_cast<Index>(a)] = Xty[active[a]] - lambda * signs[a];
      }
      b = llt.solve(rhs);
    }
    if (lambda > 0.0) {
      std::vector<Index> kept;
      std::vector<double> kept_signs;
      for (std::size_t a = 0; a < active.size(); ++a) {
        if (sign_of(b[static_cast<Index>(a)]) == signs[a]) {
          kept.push_back(active[a]);
          kept_signs.push_back(signs[a]);
        }
      }
      if (kept.size() != active.size()) {
        active = std::move(kept);
        signs = std::move(kept_signs);
        continue;
      }
    }
    const VectorXd grad = system.gradient(active, b);
    std::vector<Index> added;
    std::size_t cursor = 0;
    for (Index i = 0; i < p; ++i) {
      while (cursor < active.size() && active[cursor] < i) ++cursor;
      const bool in_active = cursor < active.size() && active[cursor] == i;
      if (!in_active && std::abs(grad[i]) > lambda + tol) added.push_back(i);
    }
    const bool violated = !added.empty();
    for (Index i : added) {
      auto pos = std::lower_bound(active.begin(), active.end(), i);
      signs.insert(signs.begin() + (pos - active.begin()), sign_of(grad[i]));
      active.insert(pos, i);
    }
    if (violated) continue;
    VectorXd beta = VectorXd::Zero(p);
    for (std::size_t a = 0; a < active.size(); ++a) beta[active[a]] = b[static_cast<Index>(a)];
    return beta;
  }
  return std::nullopt;
}

class GramSystem final : public ActiveSetSystem {
 public:
  GramSystem(const MatrixXd& gram, const VectorXd& Xty) : gram_(gram), Xty_(Xty) {}
  MatrixXd gram_block(std::span<const Index> active) const override {
    const auto n = static_cast<Index>(active.size());
    MatrixXd out(n, n);
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < n; ++b) out(a, b) = gram_(active[a], active[b]);
    return out;
  }
  VectorXd gradient(std::span<const Index> active, const VectorXd& beta_active) const override {
    VectorXd g = Xty_;
    for (std::size_t a = 0; a < active.size(); ++a) {
      g.noalias() -= gram_.col(active[a]) * beta_active[static_cast<Index>(a)];
    }
    return g;
  }

 private:
  const MatrixXd& gram_;
  const VectorXd& Xty_;
};

class DesignSystem final : public ActiveSetSystem {
 public:
  DesignSystem(const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& y)
      : X_(X), y_(y) {}
  MatrixXd gram_block(std::span<const Index> active) const override {
    const MatrixXd xs = columns(active);
    return xs.transpose() * xs;
  }
  VectorXd gradient(std::span<const Index> active, const VectorXd& beta_active) const override {
    VectorXd r = y_;
    if (!active.empty()) r.noalias() -= columns(active) * beta_active;
    return X_.transpose() * r;
  }

 private:
  MatrixXd columns(std::span<const Index> active) const {
    MatrixXd xs(X_.rows(), static_cast<Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) xs.col(static_cast<Index>(a)) = X_.col(active[a]);
    return xs;
  }
  Eigen::Ref<const MatrixXd> X_;
  Eigen::Ref<const VectorXd> y_;
};

inline AdmmState initial_state(Index p, const AdmmState* warm) {
  if (warm == nullptr) return {VectorXd::Zero(p), VectorXd::Zero(p), VectorXd::Zero(p)};
  if (warm->x.size() != p || warm->z.size() != p || warm->u.size() != p) {
    throw InputError("warm start vectors must have length " + std::to_string(p));
  }
  return *warm;
}

}  // namespace detail

/// ADMM for 1/2||y - X beta||^2 + lambda||beta||_1 on a fixed design.
///
/// Holds a reference to X; the caller keeps it alive. The factorization is
/// computed once and shared by every `solve` call, so a lambda path or several
/// response vectors on the same design pay for it once.
class LassoAdmm {
  static const AdmmSettings& validated(const AdmmSettings& s) {
    s.validate();
    return s;
  }

 public:
  LassoAdmm(const Eigen::Ref<const MatrixXd>& X, const AdmmSettings& settings = {})
      : X_(X), settings_(settings), factor_(X, validated(settings).rho) {}

  const NormalFactorization& factorization() const noexcept { return factor_; }
  const AdmmSettings& settings() const noexcept { return settings_; }

  AdmmResult solve(const Eigen::Ref<const VectorXd>& y, double lambda,
                   const AdmmState* warm = nullptr) const {
    check_dimensions(X_, y);
    if (!(lambda >= 0.0)) throw InputError("lambda must be nonnegative");
    const Index p = X_.cols();
    const VectorXd Xty = X_.transpose() * y;
    const double lambda_max = p > 0 ? Xty.cwiseAbs().maxCoeff() : 0.0;

    AdmmResult result;
    result.rho = settings_.rho;
    if (lambda >= lambda_max) {
      // The zero vector satisfies the optimality conditions exactly.
      result.beta = VectorXd::Zero(p);
      result.state = {result.beta, result.beta, Xty / settings_.rho, settings_.rho};
      result.converged = true;
      result.objective = 0.5 * y.squaredNorm();
      return result;
    }

    AdmmState st = detail::initial_state(p, warm);
    const NormalFactorization* fac = &factor_;
    std::optional<NormalFactorization> rescaled;
    double rho = settings_.rho;
    if (st.rho > 0.0 && st.rho != rho) {
      rho = st.rho;
      rescaled.emplace(factor_);
      rescaled->refactor(rho);
      fac = &*rescaled;
    }
    const double alpha = settings_.relaxation;
    const double sqrt_p = std::sqrt(static_cast<double>(p));
    VectorXd z_old(p);
    for (int it = 1; it <= settings_.max_iter; ++it) {
      st.x = fac->solve(Xty + rho * (st.z - st.u));
      const VectorXd x_hat = alpha * st.x + (1.0 - alpha) * st.z;
      z_old = st.z;
      st.z = soft_threshold(x_hat + st.u, lambda / rho);
      st.u += x_hat - st.z;

      result.iterations = it;
      result.primal_residual = (st.x - st.z).norm();
      result.dual_residual = rho * (st.z - z_old).norm();
      const double eps_pri =
          sqrt_p * settings_.abs_tol + settings_.rel_tol * std::max(st.x.norm(), st.z.norm());
      const double eps_dual = sqrt_p * settings_.abs_tol + settings_.rel_tol * rho * st.u.norm();
      if (result.primal_residual <= eps_pri && result.dual_residual <= eps_dual) {
        result.converged = true;
        break;
      }
      if (settings_.adaptive_rho) {
        double factor = 1.0;
        if (result.primal_residual > 10.0 * result.dual_residual) factor = 2.0;
        else if (result.dual_residual > 10.0 * result.primal_residual) factor = 0.5;
        if (factor != 1.0) {
          rho *= factor;
          st.u /= factor;
          if (!rescaled) rescaled.emplace(*fac);
          rescaled->refactor(rho);
          fac = &*rescaled;
        }
      }
    }
    result.rho = rho;
    st.rho = rho;
    result.state = st;
    result.beta = st.z;
    result.objective = objective(X_, y, lambda, result.beta);
    if (settings_.polish) {
      std::optional<VectorXd> refined;
      if (factor_.tall()) {
        refined = detail::polish(detail::GramSystem(factor_.gram(), Xty), Xty, lambda, st.z);
      } else {
        refined = detail::polish(detail::DesignSystem(X_, y), Xty, lambda, st.z);
      }
      if (refined) {
        const double refined_obj = objective(X_, y, lambda, *refined);
        if (refined_obj <= result.objective + 1e-12 * std::abs(result.objective)) {
          result.beta = std::move(*refined);
          result.objective = refined_obj;
          result.polished = true;
        }
      }
    }
    return result;
  }

 private:
  Eigen::Ref<const MatrixXd> X_;
  AdmmSettings settings_;
  NormalFactorization factor_;
};

inline AdmmResult lasso_admm(const RegressionProblem& problem, double lambda,
                             const AdmmSettings& settings = {},
                             const AdmmState* warm_start = nullptr) {
  check_dimensions(problem.X, problem.y);
  return LassoAdmm(problem.X, settings).solve(problem.y, lambda, warm_start);
}

/// Least squares as the lambda = 0 case of the LASSO solver.
inline AdmmResult ols_admm(const RegressionProblem& problem, const AdmmSettings& settings = {}) {
  return lasso_admm(problem, 0.0, settings);
}

/// Global-consensus ADMM over row shards.
///
/// Each shard k keeps its own x_k and u_k; the z-update averages x_k + u_k in
/// shard order and soft-thresholds with lambda / (rho K). Shard x-updates run
/// on up to `workers` threads; the reduction order does not depend on them.
inline AdmmResult consensus_lasso_admm(std::span<const RegressionProblem> shards, double lambda,
                                       const AdmmSettings& settings = {},
                                       std::size_t workers = 1) {
  settings.validate();
  if (shards.empty()) throw InputError("consensus_lasso_admm: empty shard list");
  if (!(lambda >= 0.0)) throw InputError("lambda must be nonnegative");
  const Index p = shards.front().cols();
  bool any_rows = false;
  for (std::size_t k = 0; k < shards.size(); ++k) {
    if (shards[k].cols() != p) {
      throw InputError("consensus_lasso_admm: shard " + std::to_string(k) + " has " +
                       std::to_string(shards[k].cols()) + " columns, expected " +
                       std::to_string(p));
    }
    check_dimensions(shards[k].X, shards[k].y);
    any_rows = any_rows || shards[k].rows() > 0;
  }
  if (!any_rows) throw InputError("consensus_lasso_admm: all shards are empty");

  const auto K = shards.size();
  double rho = settings.rho;
  std::vector<NormalFactorization> factors;
  std::vector<VectorXd> Xty(K);
  factors.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    factors.emplace_back(shards[k].X, rho);
    Xty[k] = shards[k].X.transpose() * shards[k].y;
  }
  VectorXd Xty_total = VectorXd::Zero(p);
  for (const auto& v : Xty) Xty_total += v;

  // Gram of the stacked problem, accumulated in shard order.
  MatrixXd gram_total = MatrixXd::Zero(p, p);
  for (const auto& s : shards) gram_total.noalias() += s.X.transpose() * s.X;

  auto total_objective = [&](const VectorXd& beta) {
    double loss = 0.0;
    for (const auto& s : shards) loss += 0.5 * (s.y - s.X * beta).squaredNorm();
    return loss + lambda * beta.lpNorm<1>();
  };

  AdmmResult result;
  result.rho = rho;
  const double lambda_max = p > 0 ? Xty_total.cwiseAbs().maxCoeff() : 0.0;
  if (lambda >= lambda_max) {
    result.beta = VectorXd::Zero(p);
    result.state = {result.beta, result.beta, VectorXd::Zero(p), rho};
    result.converged = true;
    result.objective = total_objective(result.beta);
    return result;
  }

  std::vector<VectorXd> x(K, VectorXd::Zero(p));
  std::vector<VectorXd> u(K, VectorXd::Zero(p));
  std::vector<VectorXd> x_hat(K, VectorXd::Zero(p));
  VectorXd z = VectorXd::Zero(p);
  VectorXd z_old(p);
  const double alpha = settings.relaxation;
  const double sqrt_pk = std::sqrt(static_cast<double>(p * static_cast<Index>(K)));
  for (int it = 1; it <= settings.max_iter; ++it) {
    parallel_for(K, workers, [&](std::size_t k) {
      x[k] = factors[k].solve(Xty[k] + rho * (z - u[k]));
      x_hat[k] = alpha * x[k] + (1.0 - alpha) * z;
    });
    z_old = z;
    VectorXd mean = VectorXd::Zero(p);
    for (std::size_t k = 0; k < K; ++k) mean += x_hat[k] + u[k];
    mean /= static_cast<double>(K);
    z = soft_threshold(mean, lambda / (rho * static_cast<double>(K)));

    double r2 = 0.0, x2 = 0.0, u2 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      u[k] += x_hat[k] - z;
      r2 += (x[k] - z).squaredNorm();
      x2 += x[k].squaredNorm();
      u2 += u[k].squaredNorm();
    }
    result.iterations = it;
    result.primal_residual = std::sqrt(r2);
    result.dual_residual = rho * std::sqrt(static_cast<double>(K)) * (z - z_old).norm();
    const double eps_pri =
        sqrt_pk * settings.abs_tol +
        settings.rel_tol * std::max(std::sqrt(x2), std::sqrt(static_cast<double>(K)) * z.norm());
    const double eps_dual = sqrt_pk * settings.abs_tol + settings.rel_tol * rho * std::sqrt(u2);
    if (result.primal_residual <= eps_pri && result.dual_residual <= eps_dual) {
      result.converged = true;
      break;
    }
    if (settings.adaptive_rho) {
      double factor = 1.0;
      if (result.primal_residual > 10.0 * result.dual_residual) factor = 2.0;
      else if (result.dual_residual > 10.0 * result.primal_residual) factor = 0.5;
      if (factor != 1.0) {
        rho *= factor;
        for (auto& uk : u) uk /= factor;
        for (auto& f : factors) f.refactor(rho);
      }
    }
  }
  result.rho = rho;
  VectorXd x_mean = VectorXd::Zero(p);
  VectorXd u_mean = VectorXd::Zero(p);
  for (std::size_t k = 0; k < K; ++k) {
    x_mean += x[k];
    u_mean += u[k];
  }
  result.state = {x_mean / static_cast<double>(K), z, u_mean / static_cast<double>(K), rho};
  result.beta = z;
  result.objective = total_objective(z);
  if (settings.polish) {
    auto refined = detail::polish(detail::GramSystem(gram_total, Xty_total), Xty_total, lambda, z);
    if (refined) {
      const double refined_obj = total_objective(*refined);
      if (refined_obj <= result.objective + 1e-12 * std::abs(result.objective)) {
        result.beta = std::move(*refined);
        result.objective = refined_obj;
        result.polished = true;
      }
    }
  }
  return result;
}

}  // namespace uoi
