#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_set>

#include "uoi/resampling.hpp"

using namespace uoi;

TEST(Seeds, SplitMixReferenceValue) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Seeds, Pure) {
  EXPECT_EQ(derive_seed(42, Phase::selection, 3), derive_seed(42, Phase::selection, 3));
}

TEST(Seeds, NoCollisionsAcrossBootstrapsAndPhases) {
  std::mt19937_64 rng(1);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(1200000);
  std::size_t total = 0;
  for (int s = 0; s < 1000; ++s) {
    const std::uint64_t master = rng();
    for (Phase phase : {Phase::selection, Phase::estimation_train, Phase::estimation_eval}) {
      for (std::uint64_t k = 0; k < 334; ++k) {
        seen.insert(derive_seed(master, phase, k));
        ++total;
      }
    }
  }
  EXPECT_GE(total, 1000000u);
  EXPECT_EQ(seen.size(), total);
}

TEST(Plan, Validation) {
  BootstrapPlan plan;
  EXPECT_NO_THROW(plan.validate());
  plan.b1 = 0;
  EXPECT_THROW(plan.validate(), InputError);
  plan = {};
  plan.b2 = 0;
  EXPECT_THROW(plan.validate(), InputError);
  plan = {};
  plan.subsample_fraction = 0.0;
  EXPECT_THROW(plan.validate(), InputError);
  plan.subsample_fraction = 1.0;
  EXPECT_NO_THROW(plan.validate());
  plan.eval_fraction = 1.0;
  EXPECT_THROW(plan.validate(), InputError);
  plan = {};
  plan.block_len = 0;
  EXPECT_THROW(plan.validate(), InputError);
}

TEST(RowBootstrap, SingleRow) {
  for (std::uint64_t seed : {0ULL, 5ULL, 99ULL}) {
    EXPECT_EQ(row_bootstrap(1, 1.0, seed).rows, std::vector<std::size_t>{0});
  }
}

TEST(RowBootstrap, LengthContract) {
  EXPECT_EQ(row_bootstrap(10, 0.8, 3).rows.size(), 8u);
  EXPECT_EQ(row_bootstrap(7, 0.5, 3).rows.size(), 4u);
  EXPECT_THROW(row_bootstrap(0, 0.5, 3), InputError);
  EXPECT_THROW(row_bootstrap(5, 1.5, 3), InputError);
}

TEST(RowBootstrap, UniformFrequencies) {
  // chi-square goodness of fit on 10^5 draws over 20 cells; the 1% critical
  // value for 19 degrees of freedom is 36.19.
  const std::size_t n = 20;
  std::vector<double> count(n, 0.0);
  std::size_t draws = 0;
  for (std::uint64_t seed = 0; draws < 100000; ++seed) {
    for (auto r : row_bootstrap(n, 1.0, derive_seed(7, Phase::selection, seed)).rows) {
      count[r] += 1.0;
      ++draws;
    }
  }
  const double expected = static_cast<double>(draws) / n;
  double chi2 = 0.0;
  for (double c : count) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 36.19);
}

TEST(TrainEval, PartitionContract) {
  const TrainEvalSplit s = train_eval_split(10, 0.2, 11);
  ASSERT_EQ(s.eval.rows.size(), 2u);
  EXPECT_NE(s.eval.rows[0], s.eval.rows[1]);
  EXPECT_EQ(s.train.rows.size(), 8u);
  for (auto r : s.train.rows) {
    EXPECT_FALSE(std::binary_search(s.eval.rows.begin(), s.eval.rows.end(), r));
  }
  EXPECT_EQ(s.eval.phase, Phase::estimation_eval);
  EXPECT_EQ(s.train.phase, Phase::estimation_train);
}

TEST(TrainEval, SourceRowsPartitionAllRows) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t n = 5 + seed % 40;
    const TrainEvalSplit s = train_eval_split(n, 0.3, seed);
    std::set<std::size_t> eval(s.eval.rows.begin(), s.eval.rows.end());
    std::set<std::size_t> source;
    for (std::size_t r = 0; r < n; ++r)
      if (!eval.count(r)) source.insert(r);
    for (auto r : s.train.rows) EXPECT_TRUE(source.count(r));
    EXPECT_EQ(eval.size() + source.size(), n);
    EXPECT_EQ(eval.size(), s.eval.rows.size());  // distinct
  }
}

TEST(TrainEval, DeterministicAndValidated) {
  const auto a = train_eval_split(30, 0.25, 4);
  const auto b = train_eval_split(30, 0.25, 4);
  EXPECT_EQ(a.train.rows, b.train.rows);
  EXPECT_EQ(a.eval.rows, b.eval.rows);
  EXPECT_THROW(train_eval_split(1, 0.5, 0), InputError);
  EXPECT_THROW(train_eval_split(10, 0.0, 0), InputError);
  // eval never swallows every row
  EXPECT_EQ(train_eval_split(2, 0.9, 0).eval.rows.size(), 1u);
}

TEST(BlockBootstrap, TwoBlocks) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto rows = block_bootstrap(6, 3, seed).rows;
    ASSERT_EQ(rows.size() % 3, 0u);
    for (std::size_t i = 0; i < rows.size(); i += 3) {
      const bool first = rows[i] == 0 && rows[i + 1] == 1 && rows[i + 2] == 2;
      const bool second = rows[i] == 3 && rows[i + 1] == 4 && rows[i + 2] == 5;
      EXPECT_TRUE(first || second);
    }
  }
}

TEST(BlockBootstrap, SingleBlockIsIdentity) {
  const auto rows = block_bootstrap(9, 9, 123).rows;
  std::vector<std::size_t> id(9);
  std::iota(id.begin(), id.end(), std::size_t{0});
  EXPECT_EQ(rows, id);
}

TEST(BlockBootstrap, EveryBlockRunIsASourceBlock) {
  const std::size_t n = 53, L = 7;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto rows = block_bootstrap(n, L, seed, 0.8).rows;
    EXPECT_GE(rows.size(), static_cast<std::size_t>(std::ceil(0.8 * n)));
    ASSERT_EQ(rows.size() % L, 0u);
    for (std::size_t i = 0; i < rows.size(); i += L) {
      EXPECT_EQ(rows[i] % L, 0u);
      EXPECT_LE(rows[i] + L, n - n % L);  // tail block dropped
      for (std::size_t j = 1; j < L; ++j) EXPECT_EQ(rows[i + j], rows[i] + j);
    }
  }
}

TEST(BlockBootstrap, Errors) {
  EXPECT_THROW(block_bootstrap(4, 5, 0), InputError);
  EXPECT_THROW(block_bootstrap(4, 0, 0), InputError);
}

TEST(BlockSplit, EvalBlocksAreDisjointFromTrainingBlocks) {
  const std::size_t n = 100, L = 10;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const TrainEvalSplit s = block_train_eval_split(n, L, 0.2, seed);
    EXPECT_EQ(s.eval.rows.size(), 20u);
    EXPECT_EQ(s.train.rows.size(), 80u);
    std::set<std::size_t> eval_blocks;
    for (auto r : s.eval.rows) eval_blocks.insert(r / L);
    for (std::size_t i = 0; i < s.train.rows.size(); i += L) {
      EXPECT_FALSE(eval_blocks.count(s.train.rows[i] / L));
      for (std::size_t j = 1; j < L; ++j) EXPECT_EQ(s.train.rows[i + j], s.train.rows[i] + j);
    }
  }
  EXPECT_THROW(block_train_eval_split(10, 6, 0.2, 0), InputError);
}

TEST(Resamplers, DependOnlyOnTheirOwnSeed) {
  const RowResampler rr{50, 0.8, 0.2};
  const auto a = rr.selection(derive_seed(9, Phase::selection, 4)).rows;
  // generating other bootstraps first must not change bootstrap 4
  for (std::uint64_t k = 0; k < 4; ++k) (void)rr.selection(derive_seed(9, Phase::selection, k));
  EXPECT_EQ(rr.selection(derive_seed(9, Phase::selection, 4)).rows, a);
  const BlockResampler br{64, 8, 0.8, 0.2};
  EXPECT_EQ(br.selection(77).rows, br.selection(77).rows);
  EXPECT_EQ(br.estimation(77).train.rows, br.estimation(77).train.rows);
}

TEST(Resamplers, AutoBlockLength) {
  EXPECT_EQ(auto_block_len(100), 10u);
  EXPECT_EQ(auto_block_len(101), 11u);
  EXPECT_EQ(auto_block_len(1), 1u);
}
