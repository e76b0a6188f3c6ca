#include "bdc/distmat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace bdc {
namespace {

std::string pair_str(Eigen::Index i, Eigen::Index j) {
  return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace

DataMatrix::DataMatrix(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 2) throw ValidationError("data matrix needs at least 2 rows");
  if (values_.cols() < 1) throw ValidationError("data matrix needs at least 1 column");
  for (Eigen::Index i = 0; i < values_.rows(); ++i)
    for (Eigen::Index j = 0; j < values_.cols(); ++j)
      if (!std::isfinite(values_(i, j)))
        throw ValidationError("non-finite data value at " + pair_str(i, j));
}

std::optional<std::string> DistanceMatrix::find_violation(const Matrix& v) {
  if (v.rows() != v.cols())
    return "distance matrix must be square, got " + std::to_string(v.rows()) + "x" +
           std::to_string(v.cols());
  if (v.rows() < 2) return "distance matrix needs n >= 2";
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double x = v(i, j);
      if (!std::isfinite(x)) return "non-finite distance at " + pair_str(i, j);
      if (x < 0.0) return "negative distance at " + pair_str(i, j);
      if (i == j && x != 0.0) return "nonzero diagonal at " + pair_str(i, j);
      if (j > i && x != v(j, i)) return "asymmetric distance at " + pair_str(i, j);
    }
  }
  return std::nullopt;
}

DistanceMatrix::DistanceMatrix(Matrix values) : values_(std::move(values)) {
  if (auto err = find_violation(values_)) throw ValidationError(*err);
}

DistanceMatrix::DistanceMatrix(Matrix values, NoCheck) : values_(std::move(values)) {
  if (values_.rows() != values_.cols())
    throw ValidationError("distance matrix must be square, got " + std::to_string(values_.rows()) +
                          "x" + std::to_string(values_.cols()));
  if (values_.rows() < 2) throw ValidationError("distance matrix needs n >= 2");
}

DistanceMatrix DistanceMatrix::unchecked(Matrix values) { return {std::move(values), NoCheck{}}; }

double DistanceMatrix::median_offdiagonal() const {
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(n()) * (n() - 1) / 2);
  for (int i = 0; i < n(); ++i)
    for (int j = i + 1; j < n(); ++j) vals.push_back(values_(i, j));
  const size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  if (vals.size() % 2 == 1) return vals[mid];
  const double hi = vals[mid];
  const double lo = *std::max_element(vals.begin(), vals.begin() + mid);
  return 0.5 * (lo + hi);
}

DistanceMatrix compute_minkowski_distances(const DataMatrix& x, double q) {
  if (!(q >= 1.0) || !std::isfinite(q)) throw ParameterError("minkowski exponent q must be >= 1");
  const int n = x.n();
  const int p = x.p();
  const Matrix& v = x.values();
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double acc = 0.0;
      if (q == 1.0) {
        for (int c = 0; c < p; ++c) acc += std::abs(v(i, c) - v(j, c));
      } else if (q == 2.0) {
        for (int c = 0; c < p; ++c) {
          const double diff = v(i, c) - v(j, c);
          acc += diff * diff;
        }
        acc = std::sqrt(acc);
      } else {
        for (int c = 0; c < p; ++c) acc += std::pow(std::abs(v(i, c) - v(j, c)), q);
        acc = std::pow(acc, 1.0 / q);
      }
      d(i, j) = acc;
      d(j, i) = acc;
    }
  }
  return DistanceMatrix(std::move(d));
}

DistanceMatrix compute_arccos_distances(const DataMatrix& x) {
  const int n = x.n();
  const Matrix& v = x.values();
  for (int i = 0; i < n; ++i) {
    const double norm = v.row(i).norm();
    if (std::abs(norm - 1.0) > 1e-8)
      throw ValidationError("row " + std::to_string(i) + " is not unit norm (|y| = " +
                            std::to_string(norm) + ")");
  }
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dot = std::clamp(v.row(i).dot(v.row(j)), -1.0, 1.0);
      const double a = std::abs(std::acos(dot));
      d(i, j) = a;
      d(j, i) = a;
    }
  }
  return DistanceMatrix(std::move(d));
}

SelfExpressionMatrix::SelfExpressionMatrix(Matrix values, double tol) : values_(std::move(values)) {
  if (values_.rows() != values_.cols()) throw ValidationError("self-expression matrix must be square");
  for (Eigen::Index i = 0; i < values_.rows(); ++i) {
    if (values_(i, i) != 0.0)
      throw ValidationError("self-expression diagonal nonzero at row " + std::to_string(i));
    if (std::abs(values_.row(i).sum() - 1.0) > tol)
      throw ValidationError("self-expression row " + std::to_string(i) + " does not sum to 1");
  }
}

double self_expression_objective(const DataMatrix& x, int row, const Vector& w, double sparsity_weight) {
  const Matrix& y = x.values();
  Eigen::RowVectorXd r = y.row(row) - w.transpose() * y;
  return r.squaredNorm() + sparsity_weight * w.lpNorm<1>();
}

namespace {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

struct RowSolve {
  Vector w;
  bool converged = false;
};

// Augmented Lagrangian on 1'w = 1 with lasso coordinate descent inside.
RowSolve solve_row(const Matrix& y, const Vector& sq_norms, int row, const SubspaceEmbeddingConfig& cfg,
                   double rho) {
  const int n = static_cast<int>(y.rows());
  const double lambda = cfg.sparsity_weight;

  // Warm start at the nearest neighbour, which is feasible.
  int nearest = -1;
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    if (j == row) continue;
    const double dist = (y.row(j) - y.row(row)).squaredNorm();
    if (dist < best) {
      best = dist;
      nearest = j;
    }
  }
  RowSolve out;
  out.w = Vector::Zero(n);
  out.w(nearest) = 1.0;
  Eigen::RowVectorXd resid = y.row(row) - y.row(nearest);
  double total = 1.0;
  double multiplier = 0.0;

  constexpr int kMaxSweeps = 2000;
  for (int outer = 0; outer < cfg.max_iters; ++outer) {
    double last_change = 0.0;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double max_change = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == row) continue;
        const double curvature = 2.0 * sq_norms(j) + rho;
        const double grad = -2.0 * y.row(j).dot(resid) + multiplier + rho * (total - 1.0);
        const double updated = soft_threshold(curvature * out.w(j) - grad, lambda) / curvature;
        const double delta = updated - out.w(j);
        if (delta != 0.0) {
          out.w(j) = updated;
          resid.noalias() -= delta * y.row(j);
          total += delta;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      last_change = max_change;
      if (max_change < cfg.tol) break;
    }
    multiplier += rho * (total - 1.0);
    if (std::abs(total - 1.0) < cfg.tol && last_change < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

SelfExpressionResult solve_self_expression(const DataMatrix& x, const SubspaceEmbeddingConfig& cfg) {
  if (x.n() < 3) throw ParameterError("self-expression needs n >= 3");
  if (cfg.max_iters < 1) throw ParameterError("self-expression max_iters must be >= 1");
  if (!(cfg.tol > 0.0)) throw ParameterError("self-expression tol must be > 0");
  if (!(cfg.sparsity_weight > 0.0)) throw ParameterError("sparsity_weight must be > 0");

  const Matrix& y = x.values();
  const int n = x.n();
  const Vector sq_norms = y.rowwise().squaredNorm();
  const double rho = std::max(2.0 * sq_norms.mean(), 1e-8);

  Matrix w = Matrix::Zero(n, n);
  std::vector<int> unconverged;
  for (int i = 0; i < n; ++i) {
    RowSolve rs = solve_row(y, sq_norms, i, cfg, rho);
    if (!rs.converged) unconverged.push_back(i);
    rs.w(i) = 0.0;
    const double s = rs.w.sum();
    if (std::abs(s) < 1e-12)
      throw NumericalError("self-expression row " + std::to_string(i) + " has zero sum");
    w.row(i) = rs.w.transpose() / s;
    w(i, i) = 0.0;
  }
  std::vector<std::string> warnings;
  if (!unconverged.empty())
    warnings.push_back("self-expression: " + std::to_string(unconverged.size()) +
                       " rows did not reach tolerance within max_iters");
  return {SelfExpressionMatrix(std::move(w), 1e-8), std::move(unconverged), std::move(warnings)};
}

DistanceMatrix compute_subspace_distances(const SelfExpressionMatrix& sem) {
  const Matrix& w = sem.values();
  const int n = sem.n();
  Vector row_max(n);
  for (int i = 0; i < n; ++i) {
    row_max(i) = w.row(i).cwiseAbs().maxCoeff();
    if (row_max(i) == 0.0)
      throw ValidationError("self-expression row " + std::to_string(i) + " is all zero");
  }
  Matrix d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = 2.0 - (std::abs(w(i, j)) / row_max(i) + std::abs(w(j, i)) / row_max(j));
      const double clamped = std::clamp(v, 0.0, 2.0);
      d(i, j) = clamped;
      d(j, i) = clamped;
    }
  }
  return DistanceMatrix(std::move(d));
}

DistanceMatrix load_distance_matrix(const std::filesystem::path& path, const DistanceCsvOptions& opts) {
  Matrix m = csv::read_matrix(path, {opts.has_header});
  if (m.rows() != m.cols())
    throw ValidationError(path.string() + ": distance matrix must be square, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  if (opts.validate) {
    if (auto err = DistanceMatrix::find_violation(m)) throw ValidationError(path.string() + ": " + *err);
    return DistanceMatrix(std::move(m));
  }
  return DistanceMatrix::unchecked(std::move(m));
}

void save_distance_matrix(const DistanceMatrix& d, const std::filesystem::path& path) {
  csv::write_matrix(path, d.values());
}

DataMatrix load_data_matrix(const std::filesystem::path& path, bool has_header) {
  return DataMatrix(csv::read_matrix(path, {has_header}));
}

DataMatrix pca_project(const DataMatrix& x, int dims) {
  if (dims < 1 || dims > x.p())
    throw ParameterError("pca dimension must be in [1, " + std::to_string(x.p()) + "]");
  Matrix centred = x.values().rowwise() - x.values().colwise().mean();
  Matrix cov = centred.transpose() * centred / std::max(1, x.n() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("pca: eigendecomposition failed");
  // Eigen sorts ascending; take the trailing columns, largest first.
  Matrix basis = eig.eigenvectors().rightCols(dims).rowwise().reverse();
  // Fix the sign so the largest-magnitude loading of each axis is positive.
  for (int c = 0; c < dims; ++c) {
    Eigen::Index idx = 0;
    basis.col(c).cwiseAbs().maxCoeff(&idx);
    if (basis(idx, c) < 0) basis.col(c) *= -1.0;
  }
  return DataMatrix(centred * basis);
}

DataMatrix add_jitter(const DataMatrix& x, double sd, Rng& rng) {
  if (!(sd >= 0.0)) throw ParameterError("jitter sd must be >= 0");
  std::normal_distribution<double> noise(0.0, sd);
  Matrix v = x.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) += noise(rng);
  return DataMatrix(std::move(v));
}

}  // namespace bdc
