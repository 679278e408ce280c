#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "uoi/admm.hpp"
#include "uoi/problem.hpp"

using namespace uoi;

namespace {

RegressionProblem random_problem(Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RegressionProblem pb;
  pb.X = oracle::random_matrix(n, p, rng);
  pb.y = oracle::random_vector(n, rng);
  return pb;
}

double lambda_max_of(const RegressionProblem& pb) {
  return (pb.X.transpose() * pb.y).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(SoftThreshold, ShrinksElementwise) {
  VectorXd v(3);
  v << 3, -0.5, 1;
  const VectorXd out = soft_threshold(v, 1.0);
  EXPECT_EQ(out[0], 2.0);
  EXPECT_EQ(out[1], 0.0);
  EXPECT_EQ(out[2], 0.0);
}

TEST(SoftThreshold, ZeroThresholdIsIdentity) {
  VectorXd v(4);
  v << 1.5, -2.25, 0.0, 1e-300;
  EXPECT_EQ(soft_threshold(v, 0.0), v);
}

TEST(SoftThreshold, FullShrinkage) {
  VectorXd v(2);
  v << 1, -1;
  EXPECT_EQ(soft_threshold(v, 2.0), VectorXd::Zero(2));
}

TEST(Settings, RejectsInvalidValues) {
  AdmmSettings s;
  s.rho = 0;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.abs_tol = -1;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.rel_tol = 0;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.max_iter = 0;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.relaxation = 2.0;
  EXPECT_THROW(s.validate(), InputError);
  s.relaxation = 0.99;
  EXPECT_THROW(s.validate(), InputError);
}

TEST(Lasso, ZeroAtLambdaMax) {
  const auto pb = random_problem(40, 12, 1);
  const AdmmResult res = lasso_admm(pb, lambda_max_of(pb));
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.beta, VectorXd::Zero(12));
  EXPECT_EQ(lasso_admm(pb, 3.0 * lambda_max_of(pb)).beta, VectorXd::Zero(12));
}

TEST(Lasso, IdentityDesignIsSoftThreshold) {
  std::mt19937_64 rng(2);
  RegressionProblem pb{MatrixXd::Identity(6, 6), oracle::random_vector(6, rng), {}};
  const double kappa = 0.4;
  const AdmmResult res = lasso_admm(pb, kappa);
  EXPECT_TRUE(res.converged);
  EXPECT_LE((res.beta - soft_threshold(pb.y, kappa)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Lasso, MatchesCoordinateDescentOracle) {
  const auto pb = random_problem(50, 20, 3);
  const double lambda = 0.1 * lambda_max_of(pb);
  const AdmmResult res = lasso_admm(pb, lambda);
  const VectorXd ref = oracle::cd_lasso(pb.X, pb.y, lambda, 1e-10);
  const double ref_obj = oracle::objective_loop(pb.X, pb.y, lambda, ref);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(std::abs(res.objective - ref_obj) / ref_obj, 1e-6);
  EXPECT_LE(kkt_violation(pb.X, pb.y, lambda, res.beta), kKktTolerance);
}

TEST(Lasso, WideDesignUsesWoodburyAndMatchesOracle) {
  const auto pb = random_problem(25, 60, 4);
  const LassoAdmm solver(pb.X);
  EXPECT_FALSE(solver.factorization().tall());
  const double lambda = 0.2 * lambda_max_of(pb);
  const AdmmResult res = solver.solve(pb.y, lambda);
  const VectorXd ref = oracle::cd_lasso(pb.X, pb.y, lambda);
  const double ref_obj = oracle::objective_loop(pb.X, pb.y, lambda, ref);
  EXPECT_LE(std::abs(res.objective - ref_obj) / ref_obj, 1e-6);
  EXPECT_LE(oracle::kkt_residual(pb.X, pb.y, lambda, res.beta), kKktTolerance);
}

TEST(Lasso, UnpolishedIterateStillNearOptimal) {
  const auto pb = random_problem(80, 15, 5);
  AdmmSettings s;
  s.polish = false;
  const double lambda = 0.1 * lambda_max_of(pb);
  const AdmmResult res = lasso_admm(pb, lambda, s);
  EXPECT_TRUE(res.converged);
  EXPECT_FALSE(res.polished);
  const double ref_obj = oracle::objective_loop(pb.X, pb.y, lambda, oracle::cd_lasso(pb.X, pb.y, lambda));
  EXPECT_LE(std::abs(res.objective - ref_obj) / ref_obj, 1e-6);
}

TEST(Lasso, ResultInvariants) {
  const auto pb = random_problem(60, 10, 6);
  AdmmSettings s;
  s.max_iter = 7;
  s.polish = false;
  const AdmmResult res = lasso_admm(pb, 0.05 * lambda_max_of(pb), s);
  EXPECT_LE(res.iterations, 7);
  EXPECT_FALSE(res.converged);  // not an exception
  const AdmmResult ok = lasso_admm(pb, 0.05 * lambda_max_of(pb));
  ASSERT_TRUE(ok.converged);
  const double sqrt_p = std::sqrt(10.0);
  const auto& st = ok.state;
  EXPECT_LE(ok.primal_residual, sqrt_p * 1e-6 + 1e-5 * std::max(st.x.norm(), st.z.norm()));
  EXPECT_LE(ok.dual_residual, sqrt_p * 1e-6 + 1e-5 * ok.rho * st.u.norm());
}

TEST(Lasso, DimensionMismatchThrows) {
  RegressionProblem pb{MatrixXd::Ones(5, 2), VectorXd::Ones(4), {}};
  EXPECT_THROW(lasso_admm(pb, 0.1), InputError);
  const auto good = random_problem(5, 2, 7);
  AdmmState warm{VectorXd::Zero(3), VectorXd::Zero(3), VectorXd::Zero(3)};
  EXPECT_THROW(lasso_admm(good, 0.1, {}, &warm), InputError);
  EXPECT_THROW(lasso_admm(good, -1.0), InputError);
}

TEST(Lasso, ObjectiveDecreasesFromZeroStart) {
  const auto pb = random_problem(70, 25, 8);
  const double lambda = 0.05 * lambda_max_of(pb);
  const AdmmResult res = lasso_admm(pb, lambda);
  EXPECT_LE(res.objective, objective(pb, lambda, VectorXd::Zero(25)));
}

TEST(Lasso, WarmStartMatchesColdStartAlongGrid) {
  const auto pb = random_problem(120, 30, 9);
  const double lmax = lambda_max_of(pb);
  const LassoAdmm solver(pb.X);
  AdmmState warm;
  bool have = false;
  int warm_total = 0, cold_total = 0;
  for (double f : {0.9, 0.5, 0.25, 0.1, 0.05, 0.02}) {
    const AdmmResult cold = solver.solve(pb.y, f * lmax);
    const AdmmResult hot = solver.solve(pb.y, f * lmax, have ? &warm : nullptr);
    EXPECT_NEAR(hot.objective, cold.objective, 1e-8 * std::max(1.0, cold.objective));
    warm = hot.state;
    have = true;
    warm_total += hot.iterations;
    cold_total += cold.iterations;
  }
  EXPECT_LE(warm_total, cold_total);
}

TEST(Lasso, AdaptiveRhoConvergesToSameSolution) {
  const auto pb = random_problem(150, 40, 10);
  const double lambda = 0.03 * lambda_max_of(pb);
  AdmmSettings adaptive;
  adaptive.adaptive_rho = true;
  const AdmmResult a = lasso_admm(pb, lambda, adaptive);
  const AdmmResult f = lasso_admm(pb, lambda);
  EXPECT_TRUE(a.converged);
  EXPECT_NEAR(a.objective, f.objective, 1e-8 * f.objective);
  EXPECT_LE(a.iterations, f.iterations);
}

TEST(Lasso, OverRelaxationConverges) {
  const auto pb = random_problem(90, 20, 11);
  AdmmSettings s;
  s.relaxation = 1.6;
  const double lambda = 0.1 * lambda_max_of(pb);
  const AdmmResult res = lasso_admm(pb, lambda, s);
  EXPECT_TRUE(res.converged);
  EXPECT_LE(kkt_violation(pb.X, pb.y, lambda, res.beta), kKktTolerance);
}

TEST(Factorization, SolvesShiftedNormalEquations) {
  for (auto [n, p] : {std::pair<Index, Index>{40, 10}, {10, 40}}) {
    const auto pb = random_problem(n, p, 12);
    NormalFactorization fac(pb.X, 2.5);
    std::mt19937_64 rng(13);
    const VectorXd b = oracle::random_vector(p, rng);
    const MatrixXd A = pb.X.transpose() * pb.X + 2.5 * MatrixXd::Identity(p, p);
    EXPECT_LE((A * fac.solve(b) - b).norm(), 1e-9 * b.norm());
    fac.refactor(0.5);
    const MatrixXd A2 = pb.X.transpose() * pb.X + 0.5 * MatrixXd::Identity(p, p);
    EXPECT_LE((A2 * fac.solve(b) - b).norm(), 1e-9 * b.norm());
  }
}

TEST(Ols, IdentityDesign) {
  RegressionProblem pb{MatrixXd::Identity(2, 2), VectorXd(2), {}};
  pb.y << 2, -3;
  const AdmmResult res = ols_admm(pb);
  EXPECT_NEAR(res.beta[0], 2.0, 1e-10);
  EXPECT_NEAR(res.beta[1], -3.0, 1e-10);
}

TEST(Ols, MatchesNormalEquations) {
  const auto pb = random_problem(30, 5, 14);
  const AdmmResult res = ols_admm(pb);
  const VectorXd ref = oracle::normal_equations(pb.X, pb.y);
  EXPECT_LE((res.beta - ref).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Ols, ZeroResponse) {
  auto pb = random_problem(20, 4, 15);
  pb.y.setZero();
  EXPECT_EQ(ols_admm(pb).beta, VectorXd::Zero(4));
}

TEST(Ols, RankDeficientReturnsMinimumNormFixedPoint) {
  auto pb = random_problem(30, 4, 16);
  pb.X.col(3) = pb.X.col(0);  // duplicated column
  AdmmSettings s;
  s.max_iter = 20000;
  const AdmmResult res = ols_admm(pb, s);
  const VectorXd fitted = pb.X * res.beta;
  const VectorXd ref_fit = pb.X * pb.X.completeOrthogonalDecomposition().solve(pb.y);
  EXPECT_LE((fitted - ref_fit).norm(), 1e-6 * ref_fit.norm());
  // The duplicated pair shares the weight equally at the minimum-norm point.
  EXPECT_NEAR(res.beta[0], res.beta[3], 1e-5);
}

TEST(Objective, Definitions) {
  const auto pb = random_problem(12, 4, 17);
  EXPECT_DOUBLE_EQ(objective(pb, 0.7, VectorXd::Zero(4)), 0.5 * pb.y.squaredNorm());
  RegressionProblem id{MatrixXd::Identity(3, 3), VectorXd::Constant(3, 1.25), {}};
  EXPECT_EQ(objective(id, 0.0, id.y), 0.0);
  std::mt19937_64 rng(18);
  const VectorXd beta = oracle::random_vector(4, rng);
  EXPECT_NEAR(objective(pb, 0.3, beta), oracle::objective_loop(pb.X, pb.y, 0.3, beta), 1e-12);
  EXPECT_THROW(objective(pb, 0.3, VectorXd::Zero(5)), InputError);
}

TEST(Consensus, OneShardEqualsSingleSolve) {
  const auto pb = random_problem(60, 12, 19);
  const double lambda = 0.1 * lambda_max_of(pb);
  const std::vector<RegressionProblem> shards{pb};
  const AdmmResult c = consensus_lasso_admm(shards, lambda);
  const AdmmResult s = lasso_admm(pb, lambda);
  EXPECT_NEAR(c.objective, s.objective, 1e-8 * s.objective);
}

TEST(Consensus, FourShardsMatchUnsplit) {
  const auto pb = random_problem(100, 10, 20);
  const double lambda = 0.1 * lambda_max_of(pb);
  std::vector<RegressionProblem> shards;
  for (Index k = 0; k < 4; ++k) {
    shards.push_back({pb.X.middleRows(k * 25, 25), pb.y.segment(k * 25, 25), {}});
  }
  const AdmmResult c = consensus_lasso_admm(shards, lambda);
  const AdmmResult s = lasso_admm(pb, lambda);
  EXPECT_LE(std::abs(c.objective - s.objective) / s.objective, 1e-6);
}

TEST(Consensus, IdenticalShardsGiveSingleProblemSolution) {
  const auto pb = random_problem(40, 8, 21);
  const double lambda = 0.2 * lambda_max_of(pb);
  const std::vector<RegressionProblem> shards(3, pb);
  const AdmmResult c = consensus_lasso_admm(shards, 3.0 * lambda);
  const AdmmResult s = lasso_admm(pb, lambda);
  EXPECT_LE((c.beta - s.beta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Consensus, WorkerCountDoesNotChangeBits) {
  const auto pb = random_problem(90, 9, 22);
  std::vector<RegressionProblem> shards;
  for (Index k = 0; k < 3; ++k) shards.push_back({pb.X.middleRows(k * 30, 30), pb.y.segment(k * 30, 30), {}});
  const double lambda = 0.1 * lambda_max_of(pb);
  const AdmmResult a = consensus_lasso_admm(shards, lambda, {}, 1);
  const AdmmResult b = consensus_lasso_admm(shards, lambda, {}, 3);
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Consensus, Errors) {
  EXPECT_THROW(consensus_lasso_admm(std::vector<RegressionProblem>{}, 0.1), InputError);
  std::vector<RegressionProblem> bad{random_problem(10, 3, 23), random_problem(10, 4, 24)};
  EXPECT_THROW(consensus_lasso_admm(bad, 0.1), InputError);
  std::vector<RegressionProblem> empty{{MatrixXd(0, 3), VectorXd(0), {}}};
  EXPECT_THROW(consensus_lasso_admm(empty, 0.1), InputError);
}

TEST(Consensus, TolerantOfEmptyShard) {
  const auto pb = random_problem(50, 6, 25);
  std::vector<RegressionProblem> shards{pb, {MatrixXd(0, 6), VectorXd(0), {}}};
  const double lambda = 0.1 * lambda_max_of(pb);
  const AdmmResult c = consensus_lasso_admm(shards, lambda);
  EXPECT_LE(std::abs(c.objective - lasso_admm(pb, lambda).objective), 1e-6 * c.objective);
}
