#pragma once

#include "bdc/common.hpp"
#include "bdc/sampler.hpp"

#include <span>

namespace bdc {

/// Posterior co-assignment probabilities pr(c_i = c_j).
struct CoAssignmentMatrix {
  Matrix values;
  long n_draws = 0;
};

/// Element-wise mean of the retained CC' draws. Throws on an empty trace.
CoAssignmentMatrix coassignment_from_trace(const Trace& trace);

/// H(a) + H(b) - 2 I(a, b), natural log.
double vi_distance(std::span<const int> a, std::span<const int> b);

struct PointEstimate {
  Labels labels;
  double expected_vi = 0.0;
  /// Index of the first retained draw equal to the estimate.
  long draw_index = 0;
  long distinct_partitions = 0;
  /// pr(c_i != c_hat_i); filled by `uncertainty`.
  Vector uncertainty;
};

/// Candidate with the smallest posterior-expected VI among the distinct
/// sampled partitions; ties go to the earliest draw. Labels are
/// relabelled by first appearance.
PointEstimate point_estimate_vi(const Trace& trace);

/// Expected VI of `labels` against the retained draws.
double expected_vi(const Trace& trace, std::span<const int> labels);

struct AssignProbMatrix {
  Matrix values;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  int best_restart = 0;
  /// Objective per iteration of the winning restart.
  std::vector<double> history;
  std::vector<std::string> warnings;
};

/// Row-simplex P (n x k) minimizing ||S - PP'||_F^2 by projected gradient
/// with backtracking, best of n_restarts. Restart 0 starts from a k-means++
/// pick on the rows of S; the rest start from flat Dirichlet rows.
AssignProbMatrix simplex_factorize(const CoAssignmentMatrix& coassign, int k, Rng& rng, double tol = 1e-10,
                                   int max_iters = 2000, int n_restarts = 5);

/// Euclidean projection of v onto the probability simplex.
Vector project_to_simplex(const Vector& v);

/// 1 - fraction of draws in which i shares a cluster with a strict majority
/// of its peers in the estimate's cluster. For a point alone in its
/// estimated cluster, the indicator is "alone in the draw as well".
Vector uncertainty(std::span<const int> point_labels, const Trace& trace);

}  // namespace bdc
