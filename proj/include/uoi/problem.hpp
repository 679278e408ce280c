#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uoi/error.hpp"

namespace uoi {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Linear model y = X beta + noise. `beta_true` is present for synthetic data.
struct RegressionProblem {
  MatrixXd X;
  VectorXd y;
  std::optional<VectorXd> beta_true;

  Index rows() const { return X.rows(); }
  Index cols() const { return X.cols(); }
};

inline void check_dimensions(const Eigen::Ref<const MatrixXd>& X,
                             const Eigen::Ref<const VectorXd>& y) {
  if (X.rows() != y.size()) {
    throw InputError("dimension mismatch: X has " + std::to_string(X.rows()) +
                     " rows but y has " + std::to_string(y.size()) + " entries");
  }
}

/// Copies the listed rows of `source` in order (duplicates allowed).
template <class Derived>
typename Derived::PlainObject gather_rows(const Eigen::MatrixBase<Derived>& source,
                                          std::span<const std::size_t> rows) {
  typename Derived::PlainObject out(static_cast<Index>(rows.size()), source.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Index>(r)) = source.row(static_cast<Index>(rows[r]));
  }
  return out;
}

/// Copies the listed columns of `source` in order.
inline MatrixXd gather_cols(const Eigen::Ref<const MatrixXd>& source,
                            std::span<const std::size_t> cols) {
  MatrixXd out(source.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.col(static_cast<Index>(c)) = source.col(static_cast<Index>(cols[c]));
  }
  return out;
}

/// Stacks row shards vertically.
inline RegressionProblem concatenate(std::span<const RegressionProblem> shards) {
  if (shards.empty()) throw InputError("concatenate: no shards");
  Index rows = 0;
  for (const auto& s : shards) rows += s.rows();
  RegressionProblem out;
  out.X.resize(rows, shards.front().cols());
  out.y.resize(rows);
  Index at = 0;
  for (const auto& s : shards) {
    out.X.middleRows(at, s.rows()) = s.X;
    out.y.segment(at, s.rows()) = s.y;
    at += s.rows();
  }
  return out;
}

}  // namespace uoi
