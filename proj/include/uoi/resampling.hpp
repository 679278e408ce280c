#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uoi/error.hpp"

namespace uoi {

enum class Phase : std::uint8_t { selection = 0, estimation_train = 1, estimation_eval = 2 };

inline const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::selection: return "selection";
    case Phase::estimation_train: return "estimation-train";
    case Phase::estimation_eval: return "estimation-eval";
  }
  return "unknown";
}

/// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for bootstrap `k` of `phase`. For a fixed master seed the map is
/// injective over (phase, k) with k < 2^56, so every task owns its own stream
/// regardless of which other tasks ran or in what order.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, Phase phase,
                                    std::uint64_t k) noexcept {
  const std::uint64_t tag = (static_cast<std::uint64_t>(phase) << 56) | (k & ((1ULL << 56) - 1));
  return splitmix64(splitmix64(master_seed) ^ tag);
}

/// Bootstrap counts and subsample sizes for one UoI fit.
struct BootstrapPlan {
  std::uint64_t master_seed = 0;
  std::size_t b1 = 5;  ///< selection bootstraps
  std::size_t b2 = 5;  ///< estimation bootstraps
  double subsample_fraction = 0.8;
  double eval_fraction = 0.2;
  std::optional<std::size_t> block_len;  ///< empty: ceil(sqrt(n))

  void validate() const {
    if (b1 < 1) throw InputError("BootstrapPlan: b1 must be at least 1");
    if (b2 < 1) throw InputError("BootstrapPlan: b2 must be at least 1");
    if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) {
      throw InputError("BootstrapPlan: subsample_fraction must lie in (0, 1]");
    }
    if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
      throw InputError("BootstrapPlan: eval_fraction must lie in (0, 1)");
    }
    if (block_len && *block_len < 1) throw InputError("BootstrapPlan: block_len must be positive");
  }
};

struct SampleIndices {
  std::vector<std::size_t> rows;
  Phase phase = Phase::selection;
  std::size_t bootstrap = 0;
};

struct TrainEvalSplit {
  SampleIndices train;
  SampleIndices eval;
};

inline std::size_t auto_block_len(std::size_t n_effective) {
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_effective)))));
}

namespace detail {

inline std::size_t ceil_fraction(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
}

/// First `count` entries of a Fisher-Yates shuffle of [0, n), sorted.
inline std::vector<std::size_t> choose_distinct(std::size_t n, std::size_t count,
                                                std::mt19937_64& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace detail

/// ceil(fraction * n) rows drawn uniformly with replacement.
inline SampleIndices row_bootstrap(std::size_t n, double fraction, std::uint64_t seed) {
  if (n == 0) throw InputError("row_bootstrap: n must be positive");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InputError("row_bootstrap: fraction must lie in (0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  SampleIndices out;
  out.rows.resize(detail::ceil_fraction(fraction, n));
  for (auto& r : out.rows) r = pick(rng);
  return out;
}

/// Held-out rows and a training bootstrap that never share a source row.
///
/// ceil(eval_fraction * n) distinct rows (at most n - 1) form the evaluation
/// set in ascending order; the training set draws as many rows as remain, with
/// replacement, from the remaining rows.
inline TrainEvalSplit train_eval_split(std::size_t n, double eval_fraction, std::uint64_t seed) {
  if (n < 2) throw InputError("train_eval_split: need at least 2 rows");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw InputError("train_eval_split: eval_fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  const std::size_t n_eval = std::min(detail::ceil_fraction(eval_fraction, n), n - 1);
  TrainEvalSplit split;
  split.eval.phase = Phase::estimation_eval;
  split.train.phase = Phase::estimation_train;
  split.eval.rows = detail::choose_distinct(n, n_eval, rng);

  std::vector<std::size_t> source;
  source.reserve(n - n_eval);
  std::size_t e = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (e < split.eval.rows.size() && split.eval.rows[e] == r) {
      ++e;
    } else {
      source.push_back(r);
    }
  }
  std::uniform_int_distribution<std::size_t> pick(0, source.size() - 1);
  split.train.rows.resize(source.size());
  for (auto& r : split.train.rows) r = source[pick(rng)];
  return split;
}

/// Moving-block resample preserving temporal order inside each block.
///
/// Rows are cut into floor(n / block_len) consecutive blocks (a short tail is
/// dropped). Blocks are drawn with replacement and concatenated in draw order
/// until at least ceil(fraction * n) rows are collected.
inline SampleIndices block_bootstrap(std::size_t n_effective, std::size_t block_len,
                                     std::uint64_t seed, double fraction = 1.0) {
  if (block_len < 1) throw InputError("block_bootstrap: block_len must be positive");
  if (block_len > n_effective) {
    throw InputError("block_bootstrap: block_len " + std::to_string(block_len) +
                     " exceeds series length " + std::to_string(n_effective));
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw InputError("block_bootstrap: fraction must lie in (0, 1]");
  }
  const std::size_t blocks = n_effective / block_len;
  const std::size_t target = detail::ceil_fraction(fraction, n_effective);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, blocks - 1);
  SampleIndices out;
  out.rows.reserve(target + block_len);
  while (out.rows.size() < target) {
    const std::size_t start = pick(rng) * block_len;
    for (std::size_t i = 0; i < block_len; ++i) out.rows.push_back(start + i);
  }
  return out;
}

/// Block analog of train_eval_split: whole blocks are held out, and training
/// blocks are drawn with replacement from the others.
inline TrainEvalSplit block_train_eval_split(std::size_t n_effective, std::size_t block_len,
                                             double eval_fraction, std::uint64_t seed) {
  if (block_len < 1 || block_len > n_effective) {
    throw InputError("block_train_eval_split: block_len must lie in [1, n]");
  }
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw InputError("block_train_eval_split: eval_fraction must lie in (0, 1)");
  }
  const std::size_t blocks = n_effective / block_len;
  if (blocks < 2) {
    throw InputError("block_train_eval_split: need at least two blocks of length " +
                     std::to_string(block_len));
  }
  std::mt19937_64 rng(seed);
  const std::size_t n_eval =
      std::clamp<std::size_t>(detail::ceil_fraction(eval_fraction, blocks), 1, blocks - 1);
  const std::vector<std::size_t> eval_blocks = detail::choose_distinct(blocks, n_eval, rng);

  TrainEvalSplit split;
  split.eval.phase = Phase::estimation_eval;
  split.train.phase = Phase::estimation_train;
  std::vector<std::size_t> train_blocks;
  std::size_t e = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    if (e < eval_blocks.size() && eval_blocks[e] == b) {
      ++e;
      for (std::size_t i = 0; i < block_len; ++i) split.eval.rows.push_back(b * block_len + i);
    } else {
      train_blocks.push_back(b);
    }
  }
  const std::size_t target = train_blocks.size() * block_len;
  std::uniform_int_distribution<std::size_t> pick(0, train_blocks.size() - 1);
  split.train.rows.reserve(target);
  while (split.train.rows.size() < target) {
    const std::size_t start = train_blocks[pick(rng)] * block_len;
    for (std::size_t i = 0; i < block_len; ++i) split.train.rows.push_back(start + i);
  }
  return split;
}

/// i.i.d. row resampling for regression data.
struct RowResampler {
  std::size_t n = 0;
  double fraction = 0.8;
  double eval_fraction = 0.2;

  SampleIndices selection(std::uint64_t seed) const { return row_bootstrap(n, fraction, seed); }
  TrainEvalSplit estimation(std::uint64_t seed) const {
    return train_eval_split(n, eval_fraction, seed);
  }
};

/// Block resampling over time-ordered design rows.
struct BlockResampler {
  std::size_t n = 0;
  std::size_t block_len = 1;
  double fraction = 0.8;
  double eval_fraction = 0.2;

  SampleIndices selection(std::uint64_t seed) const {
    return block_bootstrap(n, block_len, seed, fraction);
  }
  TrainEvalSplit estimation(std::uint64_t seed) const {
    return block_train_eval_split(n, block_len, eval_fraction, seed);
  }
};

}  // namespace uoi
