#pragma once

// Reference implementations used only by the tests. Each one follows a
// different algorithm from the library code it checks.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

namespace oracle {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Cyclic coordinate descent for 1/2||y - X b||^2 + lambda ||b||_1, run until
// no coordinate moves by more than tol (scaled by its column norm).
inline VectorXd cd_lasso(const MatrixXd& X, const VectorXd& y, double lambda, double tol = 1e-13,
                         int max_sweeps = 1000000) {
  const Index p = X.cols();
  VectorXd beta = VectorXd::Zero(p);
  VectorXd resid = y;
  VectorXd sq(p);
  for (Index j = 0; j < p; ++j) sq[j] = X.col(j).squaredNorm();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double biggest = 0.0;
    for (Index j = 0; j < p; ++j) {
      if (sq[j] == 0.0) continue;
      const double rho = X.col(j).dot(resid) + sq[j] * beta[j];
      double next = 0.0;
      if (rho > lambda) next = (rho - lambda) / sq[j];
      else if (rho < -lambda) next = (rho + lambda) / sq[j];
      const double delta = next - beta[j];
      if (delta != 0.0) {
        resid -= delta * X.col(j);
        beta[j] = next;
        biggest = std::max(biggest, std::abs(delta) * std::sqrt(sq[j]));
      }
    }
    if (biggest < tol * (1.0 + y.norm())) break;
  }
  return beta;
}

// Solves (X'X) b = X'y with a pivoted QR of the Gram matrix.
inline VectorXd normal_equations(const MatrixXd& X, const VectorXd& y) {
  const MatrixXd gram = X.transpose() * X;
  const VectorXd rhs = X.transpose() * y;
  return gram.colPivHouseholderQr().solve(rhs);
}

inline double objective_loop(const MatrixXd& X, const VectorXd& y, double lambda,
                             const VectorXd& beta) {
  double sse = 0.0;
  for (Index r = 0; r < X.rows(); ++r) {
    double fit = 0.0;
    for (Index c = 0; c < X.cols(); ++c) fit += X(r, c) * beta[c];
    sse += (y[r] - fit) * (y[r] - fit);
  }
  double l1 = 0.0;
  for (Index c = 0; c < beta.size(); ++c) l1 += std::abs(beta[c]);
  return 0.5 * sse + lambda * l1;
}

// Lagged design written out index by index with 1-based time as in the usual
// statement: row for response x_tau holds x_{tau-1}, ..., x_{tau-d}, and rows
// run tau = N, N-1, ..., d+1.
inline void var_design_loop(const MatrixXd& series, std::size_t d, MatrixXd& Y, MatrixXd& X) {
  const std::size_t N = static_cast<std::size_t>(series.rows());
  const std::size_t p = static_cast<std::size_t>(series.cols());
  Y.resize(static_cast<Index>(N - d), static_cast<Index>(p));
  X.resize(static_cast<Index>(N - d), static_cast<Index>(d * p));
  std::size_t row = 0;
  for (std::size_t tau = N; tau >= d + 1; --tau, ++row) {
    for (std::size_t i = 0; i < p; ++i) Y(static_cast<Index>(row), static_cast<Index>(i)) = series(static_cast<Index>(tau - 1), static_cast<Index>(i));
    for (std::size_t l = 1; l <= d; ++l) {
      for (std::size_t i = 0; i < p; ++i) {
        X(static_cast<Index>(row), static_cast<Index>((l - 1) * p + i)) =
            series(static_cast<Index>(tau - l - 1), static_cast<Index>(i));
      }
    }
  }
}

// I_p (x) X, fully materialized.
inline MatrixXd kron_identity(std::size_t p, const MatrixXd& X) {
  MatrixXd K = MatrixXd::Zero(static_cast<Index>(p) * X.rows(), static_cast<Index>(p) * X.cols());
  for (std::size_t b = 0; b < p; ++b) {
    for (Index r = 0; r < X.rows(); ++r)
      for (Index c = 0; c < X.cols(); ++c)
        K(static_cast<Index>(b) * X.rows() + r, static_cast<Index>(b) * X.cols() + c) = X(r, c);
  }
  return K;
}

inline VectorXd vec(const MatrixXd& M) {
  VectorXd out(M.size());
  Index at = 0;
  for (Index c = 0; c < M.cols(); ++c)
    for (Index r = 0; r < M.rows(); ++r) out[at++] = M(r, c);
  return out;
}

inline MatrixXd companion_loop(const std::vector<MatrixXd>& A) {
  const Index p = A.front().rows();
  const Index d = static_cast<Index>(A.size());
  MatrixXd C = MatrixXd::Zero(d * p, d * p);
  for (Index l = 0; l < d; ++l)
    for (Index r = 0; r < p; ++r)
      for (Index c = 0; c < p; ++c) C(r, l * p + c) = A[static_cast<std::size_t>(l)](r, c);
  for (Index i = p; i < d * p; ++i) C(i, i - p) = 1.0;
  return C;
}

// Spectral radius from the complex Schur form.
inline double spectral_radius(const std::vector<MatrixXd>& A) {
  const MatrixXd C = companion_loop(A);
  Eigen::ComplexEigenSolver<MatrixXd> solver(C, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

// Scalar AR(2): eigenvalues solve t^2 - a t - b = 0, the reciprocals of the
// roots of 1 - a z - b z^2.
inline std::vector<std::complex<double>> ar2_eigenvalues(double a, double b) {
  const std::complex<double> disc = std::sqrt(std::complex<double>(a * a + 4.0 * b, 0.0));
  return {(a + disc) / 2.0, (a - disc) / 2.0};
}

// Scale factor s with radius({s^l A_l}) = target, found by bisection.
inline double bisect_scale(const std::vector<MatrixXd>& A, double target) {
  auto radius_at = [&](double s) {
    std::vector<MatrixXd> scaled = A;
    double power = 1.0;
    for (auto& a : scaled) {
      power *= s;
      a *= power;
    }
    return spectral_radius(scaled);
  };
  double lo = 0.0, hi = 1.0;
  while (radius_at(hi) < target) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (radius_at(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Set intersection via a membership bitmap.
inline std::vector<std::size_t> bitmap_intersection(const std::vector<std::vector<std::size_t>>& sets,
                                                    std::size_t universe) {
  std::vector<int> count(universe, 0);
  for (const auto& s : sets) {
    std::vector<char> seen(universe, 0);
    for (auto i : s) {
      if (!seen[i]) ++count[i];
      seen[i] = 1;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < universe; ++i)
    if (count[i] == static_cast<int>(sets.size())) out.push_back(i);
  return out;
}

inline MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
  return m;
}

inline VectorXd random_vector(Index n, std::mt19937_64& rng) {
  return random_matrix(n, 1, rng).col(0);
}

// Max KKT residual of the lasso optimality conditions, computed directly.
inline double kkt_residual(const MatrixXd& X, const VectorXd& y, double lambda, const VectorXd& beta) {
  const VectorXd g = X.transpose() * (y - X * beta);
  double worst = 0.0;
  for (Index i = 0; i < beta.size(); ++i) {
    const double v = beta[i] != 0.0 ? std::abs(g[i] - lambda * (beta[i] > 0 ? 1.0 : -1.0))
                                     : std::max(0.0, std::abs(g[i]) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace oracle
