#pragma once

#include "bdc/assignment.hpp"
#include "bdc/common.hpp"
#include "bdc/distmat.hpp"

#include <span>
#include <string_view>

namespace bdc {

/// Per-cluster Gamma shape (alpha >= 1) and scale (sigma > 0).
struct ClusterParams {
  Vector alpha;
  Vector sigma;

  ClusterParams() = default;
  ClusterParams(Vector alpha, Vector sigma);
  static ClusterParams uniform(int k, double alpha, double sigma);

  [[nodiscard]] int k() const { return static_cast<int>(alpha.size()); }
  /// diag(alpha_h - 1)
  [[nodiscard]] Matrix shape_excess_diag() const;
  /// diag(sigma_h)
  [[nodiscard]] Matrix scale_diag() const;
  void validate() const;
};

/// Mixture weights on the simplex plus the symmetric Dirichlet concentration.
struct MixtureWeights {
  Vector pi;
  double dirichlet_conc = 1.0;

  static MixtureWeights uniform(int k, double conc);
  void validate() const;
};

/// log of the Gamma(shape alpha, scale sigma) density at d.
///
/// d = 0 is finite only for alpha == 1; for alpha > 1 the result is -inf.
double gamma_log_density(double d, double alpha, double sigma);

/// (1/n_h) * sum over ordered pairs i != i' of log g(d_ii'). Zero for a
/// singleton.
double cluster_log_likelihood(const DistanceMatrix& d, std::span<const int> members, double alpha,
                              double sigma);

/// Sum of cluster terms plus, optionally, sum_h n_h log pi_h.
double total_log_likelihood(const DistanceMatrix& d, const Assignment& c, const ClusterParams& params,
                            const MixtureWeights& weights, bool include_label_prior = true);

/// Pieces of the trace-form likelihood; `total()` equals the sum of
/// cluster_log_likelihood over clusters.
struct MatrixFormTerms {
  double log_distance_term = 0.0;  // tr{C'(log D)C Lambda (C'C)^+}
  double distance_term = 0.0;      // tr{C'DC (Sigma C'C)^+}
  double normalizer = 0.0;         // -sum_h (n_h - 1)(log Gamma(alpha_h) + alpha_h log sigma_h)

  [[nodiscard]] double trace_part() const { return log_distance_term - distance_term; }
  [[nodiscard]] double total() const { return trace_part() + normalizer; }
};

/// log D with a zero diagonal (the i = i' terms are excluded from the
/// product). Zero off-diagonal distances map to -inf.
Matrix masked_log_distances(const DistanceMatrix& d);

/// Trace form evaluated with dense matrix products. `c` must be one-hot by
/// row; empty columns use the generalized inverse and contribute nothing.
MatrixFormTerms matrix_form_terms(const DistanceMatrix& d, const Matrix& c, const ClusterParams& params);
double matrix_form_log_likelihood(const DistanceMatrix& d, const Matrix& c, const ClusterParams& params);

/// Adjacency of the log-Gamma distance kernel with shared parameters.
struct GraphAffinity {
  Matrix a;
  double kappa = 0.0;
};

/// A = kappa - D / sigma0 + (alpha0 - 1) log D off the diagonal, zero on it.
/// kappa is the smallest offset making every off-diagonal entry positive,
/// plus 1e-9.
GraphAffinity affinity_from_distance(const DistanceMatrix& d, double sigma0, double alpha0);

/// sum_h sum_{i in h} sum_{j not in h} A_ij / (2 n_h)
double ncut_loss(const Matrix& a, const Assignment& c);

/// tr{C'AC (C'C)^+}
double affinity_trace(const Matrix& a, const Assignment& c);

/// 2 NCut + tr{C'AC(C'C)^+} - sum_i deg_i / n_{c_i}; identically zero.
double ncut_identity_residual(const Matrix& a, const Assignment& c);

enum class BregmanGenerator { SquaredEuclidean };

BregmanGenerator parse_bregman_generator(std::string_view id);

/// phi(x) - phi(y) - (x - y)' grad phi(y)
double bregman_divergence(BregmanGenerator phi, const Vector& x, const Vector& y);

/// sum_h sum_{i in h} B(x_i, mu_h), mu_h the within-cluster mean.
double model_divergence(const Matrix& x, const Assignment& c, BregmanGenerator phi);

/// sum_h beta_h sum_{i,i' in h} B(x_i, x_i') / 2 with beta_h = 1 / n_h.
double distance_divergence(const Matrix& x, const Assignment& c, BregmanGenerator phi);

}  // namespace bdc
