#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uoi/error.hpp"
#include "uoi/pipeline.hpp"
#include "uoi/problem.hpp"
#include "uoi/resampling.hpp"

namespace uoi {

/// Vector autoregression X_t = mu + sum_l A_l X_{t-l} + U_t, U_t ~ N(0, sigma).
struct VarSpec {
  std::size_t p = 0;
  std::size_t d = 0;
  std::vector<MatrixXd> A;
  VectorXd mu;
  MatrixXd sigma;

  void validate() const {
    if (p < 1 || d < 1) throw InputError("VarSpec: p and d must be positive");
    if (A.size() != d) throw InputError("VarSpec: expected " + std::to_string(d) + " lag matrices");
    for (const auto& a : A) {
      if (a.rows() != static_cast<Index>(p) || a.cols() != static_cast<Index>(p)) {
        throw InputError("VarSpec: lag matrices must be p x p");
      }
    }
    if (mu.size() != static_cast<Index>(p)) throw InputError("VarSpec: mu must have length p");
    if (sigma.rows() != static_cast<Index>(p) || sigma.cols() != static_cast<Index>(p)) {
      throw InputError("VarSpec: sigma must be p x p");
    }
    if (!sigma.isApprox(sigma.transpose(), 1e-12)) throw InputError("VarSpec: sigma is not symmetric");
    Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw InputError("VarSpec: sigma is not positive definite");
  }
};

struct StabilityReport {
  double spectral_radius = 0.0;
  bool stable = true;
};

/// Top block row [A_1 ... A_d], identity blocks on the subdiagonal.
inline MatrixXd companion_matrix(std::span<const MatrixXd> A) {
  if (A.empty()) throw InputError("companion_matrix: need at least one lag matrix");
  const Index p = A.front().rows();
  for (std::size_t l = 0; l < A.size(); ++l) {
    if (A[l].rows() != p || A[l].cols() != p) {
      throw InputError("companion_matrix: lag matrix " + std::to_string(l + 1) +
                       " is not " + std::to_string(p) + " x " + std::to_string(p));
    }
  }
  const Index d = static_cast<Index>(A.size());
  MatrixXd C = MatrixXd::Zero(d * p, d * p);
  for (Index l = 0; l < d; ++l) C.block(0, l * p, p, p) = A[static_cast<std::size_t>(l)];
  if (d > 1) C.bottomLeftCorner((d - 1) * p, (d - 1) * p).setIdentity();
  return C;
}

/// Spectral radius of the companion matrix; stable iff strictly below 1.
inline StabilityReport check_stability(std::span<const MatrixXd> A) {
  const MatrixXd C = companion_matrix(A);
  StabilityReport report;
  if (C.rows() == 1) {
    report.spectral_radius = std::abs(C(0, 0));
  } else {
    Eigen::EigenSolver<MatrixXd> solver(C, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw Error("check_stability: eigenvalue iteration failed");
    report.spectral_radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  report.stable = report.spectral_radius < 1.0;
  return report;
}

/// N observations (rows) of a VAR process after discarding `burn_in` steps.
/// The recursion starts from zero pre-sample values.
inline MatrixXd simulate_var(const VarSpec& spec, std::size_t N, std::size_t burn_in,
                             std::uint64_t seed) {
  spec.validate();
  if (N <= spec.d) throw InputError("simulate_var: N must exceed the order d");
  if (!check_stability(spec.A).stable) throw InputError("simulate_var: process is not stable");
  const Index p = static_cast<Index>(spec.p);
  const auto d = spec.d;
  const MatrixXd L = Eigen::LLT<MatrixXd>(spec.sigma).matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  const std::size_t steps = burn_in + N;
  // ring of the last d states; history[(t - l) % d] is X_{t-l}
  std::vector<VectorXd> history(d, VectorXd::Zero(p));
  MatrixXd out(static_cast<Index>(N), p);
  VectorXd noise(p);
  for (std::size_t t = 0; t < steps; ++t) {
    VectorXd x = spec.mu;
    for (std::size_t l = 1; l <= d; ++l) x.noalias() += spec.A[l - 1] * history[(t + d - l) % d];
    for (Index i = 0; i < p; ++i) noise[i] = normal(rng);
    x.noalias() += L * noise;
    history[t % d] = x;
    if (t >= burn_in) out.row(static_cast<Index>(t - burn_in)) = x.transpose();
  }
  return out;
}

/// Stacked response and lag matrices of a VAR(d) regression.
///
/// Row r answers for time tau = N - r (1-based): Y row r is X_tau and X row r is
/// [X_{tau-1}', X_{tau-2}', ..., X_{tau-d}'], so rows run backwards in time.
struct VarDesign {
  MatrixXd Y;  ///< (N - d) x p
  MatrixXd X;  ///< (N - d) x (d p)
  std::size_t N = 0;
  std::size_t d = 0;
  std::size_t p = 0;

  Design design() const { return Design{X, Y}; }
};

inline VarDesign build_var_design(const Eigen::Ref<const MatrixXd>& series, std::size_t d) {
  const auto N = static_cast<std::size_t>(series.rows());
  if (d < 1) throw InputError("build_var_design: order d must be at least 1");
  if (N <= d) {
    throw InputError("build_var_design: series of length " + std::to_string(N) +
                     " is too short for order " + std::to_string(d));
  }
  const Index p = series.cols();
  const Index rows = static_cast<Index>(N - d);
  VarDesign out;
  out.N = N;
  out.d = d;
  out.p = static_cast<std::size_t>(p);
  out.Y.resize(rows, p);
  out.X.resize(rows, static_cast<Index>(d) * p);
  for (Index r = 0; r < rows; ++r) {
    const Index tau = static_cast<Index>(N) - 1 - r;  // 0-based time of the response
    out.Y.row(r) = series.row(tau);
    for (Index l = 1; l <= static_cast<Index>(d); ++l) {
      out.X.block(r, (l - 1) * p, 1, p) = series.row(tau - l);
    }
  }
  return out;
}

/// The p column problems of vec(Y) = (I (x) X) vec(B) + vec(E).
///
/// The Kronecker operator is block diagonal with X on every block, so column c
/// of B is a separate regression of Y_c on X.
inline std::vector<RegressionProblem> vectorized_problem(const VarDesign& design) {
  std::vector<RegressionProblem> out;
  out.reserve(design.p);
  for (Index c = 0; c < static_cast<Index>(design.p); ++c) {
    out.push_back(RegressionProblem{design.X, design.Y.col(c), std::nullopt});
  }
  return out;
}

/// Fraction of zero entries in I_p (x) X for a dense X.
inline double kronecker_sparsity(std::size_t p) {
  if (p < 1) throw InputError("kronecker_sparsity: p must be positive");
  return static_cast<double>(p - 1) / static_cast<double>(p);
}

struct VarCoefficients {
  std::vector<MatrixXd> A;
  VectorXd mu;
};

/// Splits a vec-space coefficient vector into lag matrices and intercepts.
///
/// The vector is column-stacked by response: block c holds B[:, c] (length d p)
/// followed by mu_c when `intercept` is set, where A_l(c, i) = B((l-1) p + i, c).
inline VarCoefficients partition_coefficients(const Eigen::Ref<const VectorXd>& beta, std::size_t p,
                                              std::size_t d, bool intercept) {
  const Index dp = static_cast<Index>(d * p);
  const Index stride = dp + (intercept ? 1 : 0);
  if (beta.size() != static_cast<Index>(p) * stride) {
    throw InputError("partition_coefficients: expected " +
                     std::to_string(static_cast<Index>(p) * stride) + " coefficients, got " +
                     std::to_string(beta.size()));
  }
  VarCoefficients out;
  out.A.assign(d, MatrixXd::Zero(static_cast<Index>(p), static_cast<Index>(p)));
  out.mu = VectorXd::Zero(static_cast<Index>(p));
  for (Index c = 0; c < static_cast<Index>(p); ++c) {
    for (Index l = 0; l < static_cast<Index>(d); ++l) {
      for (Index i = 0; i < static_cast<Index>(p); ++i) {
        out.A[static_cast<std::size_t>(l)](c, i) = beta[c * stride + l * static_cast<Index>(p) + i];
      }
    }
    if (intercept) out.mu[c] = beta[c * stride + dp];
  }
  return out;
}

/// Inverse of partition_coefficients.
inline VectorXd flatten_coefficients(std::span<const MatrixXd> A, const Eigen::Ref<const VectorXd>& mu,
                                     bool intercept) {
  if (A.empty()) throw InputError("flatten_coefficients: no lag matrices");
  const Index p = A.front().rows();
  const Index d = static_cast<Index>(A.size());
  const Index stride = d * p + (intercept ? 1 : 0);
  if (intercept && mu.size() != p) throw InputError("flatten_coefficients: mu must have length p");
  VectorXd beta(p * stride);
  for (Index c = 0; c < p; ++c) {
    for (Index l = 0; l < d; ++l) {
      for (Index i = 0; i < p; ++i) beta[c * stride + l * p + i] = A[static_cast<std::size_t>(l)](c, i);
    }
    if (intercept) beta[c * stride + d * p] = mu[c];
  }
  return beta;
}

/// Random sparse VAR rescaled to a given companion spectral radius.
///
/// Each row of each A_l gets `nnz_per_row` nonzeros at distinct random
/// columns, with magnitudes uniform in [0.5, 1] and random signs. Scaling A_l
/// by s^l multiplies every companion eigenvalue by s, which fixes the radius.
/// Sigma is the identity and mu is zero.
inline VarSpec generate_stable_var(std::size_t p, std::size_t d, std::size_t nnz_per_row,
                                   double target_radius, std::uint64_t seed) {
  if (p < 1 || d < 1) throw InputError("generate_stable_var: p and d must be positive");
  if (!(target_radius > 0.0 && target_radius < 1.0)) {
    throw InputError("generate_stable_var: target radius must lie in (0, 1)");
  }
  if (nnz_per_row > p) {
    throw InputError("generate_stable_var: nnz_per_row " + std::to_string(nnz_per_row) +
                     " exceeds dimension " + std::to_string(p));
  }
  VarSpec spec;
  spec.p = p;
  spec.d = d;
  spec.mu = VectorXd::Zero(static_cast<Index>(p));
  spec.sigma = MatrixXd::Identity(static_cast<Index>(p), static_cast<Index>(p));
  spec.A.assign(d, MatrixXd::Zero(static_cast<Index>(p), static_cast<Index>(p)));
  if (nnz_per_row == 0) return spec;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> magnitude(0.5, 1.0);
  std::bernoulli_distribution negative(0.5);
  constexpr int kAttempts = 100;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    for (auto& a : spec.A) {
      a.setZero();
      for (Index c = 0; c < static_cast<Index>(p); ++c) {
        for (auto col : detail::choose_distinct(p, nnz_per_row, rng)) {
          a(c, static_cast<Index>(col)) = (negative(rng) ? -1.0 : 1.0) * magnitude(rng);
        }
      }
    }
    const double radius = check_stability(spec.A).spectral_radius;
    if (radius < 1e-8) continue;  // nilpotent draw; the radius cannot be rescaled
    const double s = target_radius / radius;
    double power = 1.0;
    for (auto& a : spec.A) {
      power *= s;
      a *= power;
    }
    return spec;
  }
  throw InputError("generate_stable_var: could not draw a non-nilpotent sparse pattern");
}

struct VarFit {
  std::size_t p = 0;
  std::size_t d = 0;
  std::vector<MatrixXd> A_hat;
  VectorXd mu_hat;
  StabilityReport stability;  ///< of the estimated model
  UoiFit fit;                 ///< pipeline result in column-decomposed coefficient space

  /// beta* with intercepts interleaved, the layout partition_coefficients reads.
  VectorXd vec_coefficients() const {
    return flatten_coefficients(A_hat, mu_hat, fit.config.options.intercept);
  }
};

/// Pipeline beta* (column-decomposed, no intercepts) with intercepts interleaved per response.
inline VectorXd interleave_intercepts(const UoiFit& fit) {
  const Index m = static_cast<Index>(fit.config.n_features);
  const Index r = static_cast<Index>(fit.config.n_responses);
  const bool intercept = fit.config.options.intercept;
  const Index stride = m + (intercept ? 1 : 0);
  VectorXd out(r * stride);
  for (Index c = 0; c < r; ++c) {
    out.segment(c * stride, m) = fit.beta_star.segment(c * m, m);
    if (intercept) out[c * stride + m] = fit.intercept[c];
  }
  return out;
}

/// Bootstrap/grid defaults of the VAR scaling runs: B1 = 30, B2 = 20, q = 20.
inline BootstrapPlan var_default_plan() {
  BootstrapPlan plan;
  plan.b1 = 30;
  plan.b2 = 20;
  return plan;
}

inline UoiOptions var_default_options() {
  UoiOptions options;
  options.q = 20;
  return options;
}

inline BlockResampler block_resampler(std::size_t n_effective, const BootstrapPlan& plan) {
  const std::size_t len = plan.block_len.value_or(auto_block_len(n_effective));
  if (len > n_effective) throw InputError("block length exceeds the number of design rows");
  return BlockResampler{n_effective, len, plan.subsample_fraction, plan.eval_fraction};
}

/// UoI-VAR: the UoI pipeline on the column-decomposed vectorized VAR problem,
/// resampling design rows in blocks (one draw shared by Y and X).
inline VarFit fit_uoi_var(const Eigen::Ref<const MatrixXd>& series, std::size_t d,
                          const BootstrapPlan& plan = var_default_plan(),
                          const AdmmSettings& settings = {},
                          const UoiOptions& options = var_default_options()) {
  Stopwatch clock;
  const VarDesign var_design = build_var_design(series, d);
  const Design design = var_design.design();
  const double build_s = clock.seconds();
  const BlockResampler resampler =
      block_resampler(static_cast<std::size_t>(design.rows()), plan);

  VarFit out;
  out.p = var_design.p;
  out.d = d;
  out.fit = fit_uoi(design, resampler, plan, settings, options);
  out.fit.config.resampling = "block";
  out.fit.config.block_len = resampler.block_len;
  out.fit.timing.selection.distribution_s += build_s;
  out.fit.timing.selection.total_s += build_s;

  VarCoefficients coef =
      partition_coefficients(interleave_intercepts(out.fit), out.p, d, options.intercept);
  out.A_hat = std::move(coef.A);
  out.mu_hat = std::move(coef.mu);
  out.stability = check_stability(out.A_hat);
  return out;
}

/// One-step-ahead predictions for every row of a VAR design.
inline MatrixXd predict(const VarFit& fit, const VarDesign& design) {
  MatrixXd B(static_cast<Index>(fit.d * fit.p), static_cast<Index>(fit.p));
  for (std::size_t l = 0; l < fit.d; ++l) {
    B.middleRows(static_cast<Index>(l * fit.p), static_cast<Index>(fit.p)) = fit.A_hat[l].transpose();
  }
  MatrixXd out = design.X * B;
  out.rowwise() += fit.mu_hat.transpose();
  return out;
}

}  // namespace uoi
