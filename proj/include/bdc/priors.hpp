#pragma once

#include "bdc/common.hpp"
#include "bdc/distmat.hpp"
#include "bdc/likelihood.hpp"

namespace bdc {

/// {y : (y - center)' shape (y - center) <= 1}
struct Ellipsoid {
  Vector center;
  Matrix shape;
  double volume = 0.0;
};

struct MveeResult {
  Ellipsoid ellipsoid;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Volume of the unit ball in R^p: pi^{p/2} / Gamma(p/2 + 1).
double unit_ball_volume(int p);

/// Minimum-volume enclosing ellipsoid by Khachiyan's reweighting with
/// Todd-Yildirim away steps. The returned shape is rescaled, if needed, so
/// that every point is inside. max_iters <= 0 means 10 * n.
///
/// Throws NumericalError when the points do not affinely span R^p.
MveeResult mvee(const DataMatrix& x, double tol = 1e-7, int max_iters = 0);

/// 0.5 * (volume / (k * M_p))^{1/p}
double elicit_beta_sigma(double volume, int k, int p);

struct PriorConfig {
  int k = 2;
  double beta_sigma = 1.0;
  // alpha_h - 1 ~ Gamma(shape, rate)
  double alpha_shape = 0.5;
  double alpha_rate = 1.0;
  // sigma_h ~ Inverse-Gamma(shape, beta_sigma)
  double sigma_shape = 2.0;
  double dirichlet_conc = 0.5;

  /// Defaults with dirichlet_conc = 1 / k.
  static PriorConfig with_defaults(int k, double beta_sigma);
  void validate() const;
};

/// Smallest alpha - 1 used when evaluating the shifted-Gamma prior; its
/// density is unbounded at the boundary.
inline constexpr double kAlphaFloor = 1e-12;

double shifted_gamma_log_density(double alpha, double shape, double rate);
double inverse_gamma_log_density(double x, double shape, double scale);

/// sum_h [log Gamma(alpha_h - 1; shape, rate) + log InvGamma(sigma_h; 2, beta_sigma)]
double prior_log_densities(const ClusterParams& params, const PriorConfig& cfg);

}  // namespace bdc
