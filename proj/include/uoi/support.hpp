#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <iterator>
#include <span>
#include <vector>

#include "uoi/error.hpp"

namespace uoi {

/// Sorted, duplicate-free set of coefficient indices.
class SupportSet {
 public:
  using value_type = std::size_t;
  using const_iterator = std::vector<std::size_t>::const_iterator;

  SupportSet() = default;
  SupportSet(std::initializer_list<std::size_t> indices)
      : SupportSet(std::vector<std::size_t>(indices)) {}
  explicit SupportSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end());
    indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  }

  /// Indices whose magnitude exceeds `zero_tol`.
  template <class Vector>
  static SupportSet nonzeros(const Vector& beta, double zero_tol = 0.0) {
    SupportSet s;
    for (std::size_t i = 0; i < static_cast<std::size_t>(beta.size()); ++i) {
      if (std::abs(beta[i]) > zero_tol) s.indices_.push_back(i);
    }
    return s;
  }

  std::size_t size() const noexcept { return indices_.size(); }
  bool empty() const noexcept { return indices_.empty(); }
  const_iterator begin() const noexcept { return indices_.begin(); }
  const_iterator end() const noexcept { return indices_.end(); }
  std::size_t operator[](std::size_t i) const { return indices_[i]; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }

  bool contains(std::size_t index) const {
    return std::binary_search(indices_.begin(), indices_.end(), index);
  }
  bool is_subset_of(const SupportSet& other) const {
    return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                         indices_.end());
  }

  /// Throws unless every index lies in [0, dim).
  void check_bound(std::size_t dim) const {
    if (!indices_.empty() && indices_.back() >= dim) {
      throw InputError("support index " + std::to_string(indices_.back()) +
                       " out of range for dimension " + std::to_string(dim));
    }
  }

  friend bool operator==(const SupportSet&, const SupportSet&) = default;

 private:
  std::vector<std::size_t> indices_;
};

/// One support per regularization value, aligned with the lambda grid.
using SupportFamily = std::vector<SupportSet>;

inline SupportSet set_union(const SupportSet& a, const SupportSet& b) {
  std::vector<std::size_t> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return SupportSet(std::move(out));
}

inline SupportSet set_intersection(const SupportSet& a, const SupportSet& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return SupportSet(std::move(out));
}

/// Intersection over all bootstrap supports, folded left to right.
inline SupportSet intersect_supports(std::span<const SupportSet> supports) {
  if (supports.empty()) throw InputError("intersect_supports: empty support list");
  SupportSet acc = supports.front();
  for (std::size_t k = 1; k < supports.size() && !acc.empty(); ++k) {
    acc = set_intersection(acc, supports[k]);
  }
  return acc;
}

inline SupportSet union_supports(std::span<const SupportSet> supports) {
  SupportSet acc;
  for (const auto& s : supports) acc = set_union(acc, s);
  return acc;
}

struct SupportMetrics {
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 1.0;
  double recall = 1.0;
};

/// Selection quality against a known support. 0/0 precision or recall is 1.
inline SupportMetrics support_metrics(const SupportSet& estimated, const SupportSet& truth) {
  const std::size_t hits = set_intersection(estimated, truth).size();
  SupportMetrics m;
  m.false_positives = estimated.size() - hits;
  m.false_negatives = truth.size() - hits;
  m.precision = estimated.empty() ? 1.0 : static_cast<double>(hits) / estimated.size();
  m.recall = truth.empty() ? 1.0 : static_cast<double>(hits) / truth.size();
  return m;
}

}  // namespace uoi
