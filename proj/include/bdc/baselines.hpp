#pragma once

#include "bdc/common.hpp"
#include "bdc/distmat.hpp"

namespace bdc {

struct KMeansResult {
  Labels labels;
  Matrix centers;
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeding; best of `restarts` by inertia.
KMeansResult kmeans(const Matrix& x, int k, Rng& rng, int restarts = 10, int max_iters = 300);

/// Gaussian affinity exp(-d^2 / (2 s^2)) with s the median off-diagonal
/// distance, symmetric-normalized Laplacian, leading k eigenvectors with
/// unit-norm rows, then k-means.
Labels spectral_clustering(const DistanceMatrix& d, int k, Rng& rng);

struct GmmResult {
  Labels labels;
  Matrix means;      // k x p
  Matrix variances;  // k x p
  Vector weights;
  std::vector<double> log_likelihood;  // per EM iteration
  bool converged = false;
  std::vector<std::string> warnings;
};

/// EM for a Gaussian mixture with diagonal covariances, initialized from
/// k-means. Stops when the relative log-likelihood change drops below 1e-8
/// or after 500 iterations. Variances are floored at 1e-10.
GmmResult gmm_em_diag_fit(const DataMatrix& x, int k, Rng& rng);

/// MAP labels of gmm_em_diag_fit.
Labels gmm_em_diag(const DataMatrix& x, int k, Rng& rng);

}  // namespace bdc
