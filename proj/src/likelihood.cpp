#include "bdc/likelihood.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace bdc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Generalized inverse of C'C = diag(n_h).
Vector inverse_counts(const std::vector<int>& counts) {
  Vector inv(static_cast<Eigen::Index>(counts.size()));
  for (size_t h = 0; h < counts.size(); ++h) inv(h) = counts[h] > 0 ? 1.0 / counts[h] : 0.0;
  return inv;
}

std::vector<int> column_counts(const Matrix& c) {
  std::vector<int> counts(c.cols(), 0);
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index h = 0; h < c.cols(); ++h) {
      if (c(i, h) == 1.0) {
        ++ones;
        ++counts[h];
      } else if (c(i, h) != 0.0) {
        throw ValidationError("assignment matrix entry (" + std::to_string(i) + "," +
                              std::to_string(h) + ") is not binary");
      }
    }
    if (ones != 1)
      throw ValidationError("assignment matrix row " + std::to_string(i) + " must contain exactly one 1");
  }
  return counts;
}

}  // namespace

ClusterParams::ClusterParams(Vector a, Vector s) : alpha(std::move(a)), sigma(std::move(s)) { validate(); }

ClusterParams ClusterParams::uniform(int k, double a, double s) {
  return ClusterParams(Vector::Constant(k, a), Vector::Constant(k, s));
}

Matrix ClusterParams::shape_excess_diag() const { return (alpha.array() - 1.0).matrix().asDiagonal(); }

Matrix ClusterParams::scale_diag() const { return sigma.asDiagonal(); }

void ClusterParams::validate() const {
  if (alpha.size() != sigma.size()) throw ValidationError("alpha and sigma lengths differ");
  for (Eigen::Index h = 0; h < alpha.size(); ++h) {
    if (!(alpha(h) >= 1.0)) throw ValidationError("alpha[" + std::to_string(h) + "] must be >= 1");
    if (!(sigma(h) > 0.0) || !std::isfinite(sigma(h)))
      throw ValidationError("sigma[" + std::to_string(h) + "] must be > 0");
  }
}

MixtureWeights MixtureWeights::uniform(int k, double conc) {
  return {Vector::Constant(k, 1.0 / k), conc};
}

void MixtureWeights::validate() const {
  if (!(dirichlet_conc > 0.0)) throw ValidationError("dirichlet concentration must be > 0");
  for (Eigen::Index h = 0; h < pi.size(); ++h)
    if (!(pi(h) >= 0.0)) throw ValidationError("mixture weight " + std::to_string(h) + " is negative");
  if (std::abs(pi.sum() - 1.0) > 1e-9) throw ValidationError("mixture weights must sum to 1");
}

double gamma_log_density(double d, double alpha, double sigma) {
  if (d < 0.0 || std::isnan(d)) throw DomainError("gamma density: negative distance");
  if (!(alpha >= 1.0)) throw DomainError("gamma density: alpha must be >= 1");
  if (!(sigma > 0.0)) throw DomainError("gamma density: sigma must be > 0");
  const double norm = -std::lgamma(alpha) - alpha * std::log(sigma);
  if (d == 0.0) return alpha == 1.0 ? norm : kNegInf;
  return norm + (alpha - 1.0) * std::log(d) - d / sigma;
}

double cluster_log_likelihood(const DistanceMatrix& d, std::span<const int> members, double alpha,
                              double sigma) {
  const int n = d.n();
  for (int i : members)
    if (i < 0 || i >= n) throw ValidationError("cluster member index " + std::to_string(i) + " out of range");
  const size_t m = members.size();
  if (m <= 1) return 0.0;
  double acc = 0.0;
  for (size_t a = 0; a < m; ++a)
    for (size_t b = a + 1; b < m; ++b) acc += gamma_log_density(d(members[a], members[b]), alpha, sigma);
  return 2.0 * acc / static_cast<double>(m);
}

double total_log_likelihood(const DistanceMatrix& d, const Assignment& c, const ClusterParams& params,
                            const MixtureWeights& weights, bool include_label_prior) {
  if (c.n() != d.n()) throw ValidationError("assignment length does not match distance matrix");
  if (params.k() != c.k() || weights.pi.size() != c.k())
    throw ValidationError("parameter dimension does not match k");
  const auto lists = c.member_lists();
  double total = 0.0;
  for (int h = 0; h < c.k(); ++h)
    total += cluster_log_likelihood(d, lists[h], params.alpha(h), params.sigma(h));
  if (include_label_prior) {
    for (int h = 0; h < c.k(); ++h) {
      const int nh = c.counts()[h];
      if (nh == 0) continue;
      if (weights.pi(h) <= 0.0) return kNegInf;
      total += nh * std::log(weights.pi(h));
    }
  }
  return total;
}

Matrix masked_log_distances(const DistanceMatrix& d) {
  const int n = d.n();
  Matrix l(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) l(i, j) = i == j ? 0.0 : (d(i, j) > 0.0 ? std::log(d(i, j)) : kNegInf);
  return l;
}

MatrixFormTerms matrix_form_terms(const DistanceMatrix& d, const Matrix& c, const ClusterParams& params) {
  if (c.rows() != d.n() || c.cols() != params.k())
    throw ValidationError("assignment matrix has wrong dimensions");
  const std::vector<int> counts = column_counts(c);
  const Vector inv = inverse_counts(counts);

  // Zero off-diagonal distances give log 0; count them per cluster and keep
  // the product finite.
  Matrix logd = masked_log_distances(d);
  Matrix zero_pairs = Matrix::Zero(d.n(), d.n());
  for (int i = 0; i < d.n(); ++i)
    for (int j = 0; j < d.n(); ++j)
      if (std::isinf(logd(i, j))) {
        logd(i, j) = 0.0;
        zero_pairs(i, j) = 1.0;
      }

  const Matrix lambda = params.shape_excess_diag();
  const Matrix ginv = inv.asDiagonal();
  const Matrix sigma_inv = params.sigma.cwiseInverse().asDiagonal();

  MatrixFormTerms t;
  t.log_distance_term = (c.transpose() * logd * c * lambda * ginv).trace();
  // (Sigma C'C)^+ = (C'C)^+ Sigma^{-1}
  t.distance_term = (c.transpose() * d.values() * c * ginv * sigma_inv).trace();

  const Vector zeros_in = (c.transpose() * zero_pairs * c).diagonal();
  for (int h = 0; h < params.k(); ++h) {
    if (zeros_in(h) > 0.0 && params.alpha(h) > 1.0) t.log_distance_term = kNegInf;
    if (counts[h] > 1)
      t.normalizer -= (counts[h] - 1) * (std::lgamma(params.alpha(h)) + params.alpha(h) * std::log(params.sigma(h)));
  }
  return t;
}

double matrix_form_log_likelihood(const DistanceMatrix& d, const Matrix& c, const ClusterParams& params) {
  return matrix_form_terms(d, c, params).total();
}

GraphAffinity affinity_from_distance(const DistanceMatrix& d, double sigma0, double alpha0) {
  if (!(sigma0 > 0.0)) throw ParameterError("affinity: sigma0 must be > 0");
  if (!(alpha0 >= 1.0)) throw ParameterError("affinity: alpha0 must be >= 1");
  const int n = d.n();
  Matrix a = Matrix::Zero(n, n);
  double lowest = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      double v = -d(i, j) / sigma0;
      if (alpha0 > 1.0) {
        if (d(i, j) == 0.0)
          throw DomainError("affinity: zero distance at (" + std::to_string(i) + "," + std::to_string(j) +
                            ") with alpha0 > 1");
        v += (alpha0 - 1.0) * std::log(d(i, j));
      }
      a(i, j) = v;
      lowest = std::min(lowest, v);
    }
  }
  const double kappa = -lowest + 1e-9;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) a(i, j) += kappa;
  return {std::move(a), kappa};
}

double ncut_loss(const Matrix& a, const Assignment& c) {
  if (a.rows() != c.n() || a.cols() != c.n()) throw ValidationError("affinity size mismatch");
  double loss = 0.0;
  for (int i = 0; i < c.n(); ++i) {
    const int h = c[i];
    double cut = 0.0;
    for (int j = 0; j < c.n(); ++j)
      if (c[j] != h) cut += a(i, j);
    loss += cut / (2.0 * c.counts()[h]);
  }
  return loss;
}

double affinity_trace(const Matrix& a, const Assignment& c) {
  if (a.rows() != c.n() || a.cols() != c.n()) throw ValidationError("affinity size mismatch");
  const Matrix cm = c.matrix();
  const Matrix ginv = inverse_counts(c.counts()).asDiagonal();
  return (cm.transpose() * a * cm * ginv).trace();
}

double ncut_identity_residual(const Matrix& a, const Assignment& c) {
  double degree_term = 0.0;
  const Vector degree = a.rowwise().sum();
  for (int i = 0; i < c.n(); ++i) degree_term += degree(i) / c.counts()[c[i]];
  return 2.0 * ncut_loss(a, c) + affinity_trace(a, c) - degree_term;
}

BregmanGenerator parse_bregman_generator(std::string_view id) {
  if (id == "squared_euclidean" || id == "squared_norm") return BregmanGenerator::SquaredEuclidean;
  throw ParameterError("unsupported Bregman generator: " + std::string(id));
}

double bregman_divergence(BregmanGenerator phi, const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw ValidationError("bregman: dimension mismatch");
  switch (phi) {
    case BregmanGenerator::SquaredEuclidean: {
      const Vector grad_y = 2.0 * y;
      return x.squaredNorm() - y.squaredNorm() - (x - y).dot(grad_y);
    }
  }
  throw ParameterError("unsupported Bregman generator");
}

double model_divergence(const Matrix& x, const Assignment& c, BregmanGenerator phi) {
  if (x.rows() != c.n()) throw ValidationError("model divergence: row count mismatch");
  double total = 0.0;
  for (const auto& members : c.member_lists()) {
    if (members.empty()) continue;
    Vector mu = Vector::Zero(x.cols());
    for (int i : members) mu += x.row(i).transpose();
    mu /= static_cast<double>(members.size());
    for (int i : members) total += bregman_divergence(phi, x.row(i).transpose(), mu);
  }
  return total;
}

double distance_divergence(const Matrix& x, const Assignment& c, BregmanGenerator phi) {
  if (x.rows() != c.n()) throw ValidationError("distance divergence: row count mismatch");
  double total = 0.0;
  for (const auto& members : c.member_lists()) {
    if (members.empty()) continue;
    const double beta = 1.0 / static_cast<double>(members.size());
    double acc = 0.0;
    for (int i : members)
      for (int j : members) acc += 0.5 * bregman_divergence(phi, x.row(i).transpose(), x.row(j).transpose());
    total += beta * acc;
  }
  return total;
}

}  // namespace bdc
