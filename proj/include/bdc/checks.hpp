#pragma once

#include "bdc/common.hpp"
#include "bdc/generators.hpp"

namespace bdc {

/// Upper tail of Gamma(alpha, scale 1) at t, by adaptive Simpson quadrature.
double gamma_upper_tail(double alpha, double t, double rel_tol = 1e-12);

struct TailBoundPoint {
  double alpha = 0.0;
  double t = 0.0;
  double exact = 0.0;
  double bound = 0.0;
  bool holds = false;
  /// Bound >= 1 carries no information.
  bool vacuous = false;
};

struct TailBoundReport {
  std::vector<TailBoundPoint> points;
  int violations = 0;
  /// Smallest t in the grid from which the bound holds at every larger grid
  /// point, per alpha (same order as the input grid).
  std::vector<double> holds_from;
  [[nodiscard]] bool all_hold() const { return violations == 0; }
};

/// pr(d >= t) for d ~ Gamma(alpha, 1) against M t^alpha e^{-t},
/// M = alpha^{-alpha} e^alpha, on every (alpha, t) pair.
TailBoundReport tail_bound_check(const std::vector<double>& alpha_grid, const std::vector<double>& t_grid);

/// Sub-exponential constants for the coordinate-wise tails. Zero means
/// "fit from the data".
struct TailBoundParams {
  double nu = 0.0;
  double b = 0.0;
  double eta = 0.5;
  double q = 2.0;
  double m1 = 0.0;
  double m2 = 0.0;
};

struct EmpiricalTailPoint {
  double t = 0.0;
  double threshold = 0.0;  // t b p^eta
  double empirical = 0.0;
  double bound = 0.0;
  bool holds = false;
};

struct EmpiricalTailReport {
  TailBoundParams params;  // with fitted values filled in
  double t_min = 0.0;      // p^{1/q - eta} 2 nu^2
  std::vector<EmpiricalTailPoint> points;
  int violations = 0;
  long pairs = 0;
};

/// Generates data from `spec`, collects within-cluster q-norm distances and
/// compares pr(d > t b p^eta) with 2p exp(-t p^{eta - 1/q} / 2) for
/// t > p^{1/q - eta} 2 nu^2 on `n_t` grid points up to the largest observed
/// distance.
EmpiricalTailReport empirical_tail_check(const GeneratorSpec& spec, const TailBoundParams& params, int n_t = 50);

struct ModeReport {
  int p = 0;
  double within_mode = 0.0;
  double within_median = 0.0;
  double across_median = 0.0;
};

/// Two-component Laplace mixture per p (coordinate scale 1/2, so coordinate
/// differences have unit variance); histogram mode of within-cluster
/// Euclidean distances divided by sqrt(p).
std::vector<ModeReport> mode_concentration_check(const std::vector<int>& p_list, std::uint64_t seed = 1,
                                                 int n = 400, double bin_width = 0.05);

}  // namespace bdc
