#pragma once

#include "bdc/common.hpp"
#include "bdc/csv.hpp"

#include <filesystem>
#include <optional>

namespace bdc {

/// Observations in rows, features in columns. n >= 2, p >= 1, all finite.
class DataMatrix {
 public:
  explicit DataMatrix(Matrix values);

  [[nodiscard]] const Matrix& values() const { return values_; }
  [[nodiscard]] int n() const { return static_cast<int>(values_.rows()); }
  [[nodiscard]] int p() const { return static_cast<int>(values_.cols()); }
  [[nodiscard]] auto row(int i) const { return values_.row(i); }

 private:
  Matrix values_;
};

/// Symmetric, nonnegative, finite, with an exactly zero diagonal.
class DistanceMatrix {
 public:
  /// Throws ValidationError naming the first offending entry.
  explicit DistanceMatrix(Matrix values);

  /// Skips the symmetry/sign/diagonal checks; shape is still enforced.
  static DistanceMatrix unchecked(Matrix values);

  /// First contract violation, if any.
  static std::optional<std::string> find_violation(const Matrix& values);

  [[nodiscard]] const Matrix& values() const { return values_; }
  [[nodiscard]] int n() const { return static_cast<int>(values_.rows()); }
  [[nodiscard]] double operator()(int i, int j) const { return values_(i, j); }

  /// Median of the strictly-upper-triangular entries.
  [[nodiscard]] double median_offdiagonal() const;

 private:
  struct NoCheck {};
  DistanceMatrix(Matrix values, NoCheck);
  Matrix values_;
};

DistanceMatrix compute_minkowski_distances(const DataMatrix& x, double q);

/// Great-circle distance between unit-norm rows. Dot products are clamped
/// to [-1, 1] before the arccos.
DistanceMatrix compute_arccos_distances(const DataMatrix& x);

struct SubspaceEmbeddingConfig {
  double sparsity_weight = 1.0;
  int max_iters = 200;
  double tol = 1e-8;
};

/// Coefficients w(i, j) expressing y_i as an affine combination of the other
/// observations. Diagonal zero, rows summing to one.
class SelfExpressionMatrix {
 public:
  explicit SelfExpressionMatrix(Matrix values, double tol = 1e-8);
  [[nodiscard]] const Matrix& values() const { return values_; }
  [[nodiscard]] int n() const { return static_cast<int>(values_.rows()); }

 private:
  Matrix values_;
};

struct SelfExpressionResult {
  SelfExpressionMatrix w;
  /// Rows whose solver hit max_iters before the tolerance was met.
  std::vector<int> unconverged_rows;
  std::vector<std::string> warnings;
};

/// Solves, row by row,
///   min_w ||y_i - sum_j w_j y_j||^2 + lambda * ||w||_1
///   s.t.  w_i = 0, sum_j w_j = 1
/// by lasso coordinate descent inside an augmented-Lagrangian loop on the
/// sum-to-one constraint. Requires n >= 3.
SelfExpressionResult solve_self_expression(const DataMatrix& x, const SubspaceEmbeddingConfig& cfg);

/// Objective value of one row; used for diagnostics and tests.
double self_expression_objective(const DataMatrix& x, int row, const Vector& w, double sparsity_weight);

/// d(i, j) = 2 - (|w_ij| / max_j' |w_ij'| + |w_ji| / max_i' |w_ji'|), zero diagonal.
DistanceMatrix compute_subspace_distances(const SelfExpressionMatrix& w);

struct DistanceCsvOptions {
  bool has_header = false;
  bool validate = true;
};

DistanceMatrix load_distance_matrix(const std::filesystem::path& path, const DistanceCsvOptions& opts = {});
void save_distance_matrix(const DistanceMatrix& d, const std::filesystem::path& path);

DataMatrix load_data_matrix(const std::filesystem::path& path, bool has_header = false);

/// Projects centred data onto the leading `dims` principal axes
/// (eigenvectors of the sample covariance).
DataMatrix pca_project(const DataMatrix& x, int dims);

/// Adds N(0, sd^2) noise to every entry.
DataMatrix add_jitter(const DataMatrix& x, double sd, Rng& rng);

}  // namespace bdc
