#include "bdc/priors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace bdc {

double unit_ball_volume(int p) {
  if (p < 1) throw ParameterError("dimension must be >= 1");
  return std::pow(std::numbers::pi, 0.5 * p) / std::tgamma(0.5 * p + 1.0);
}

MveeResult mvee(const DataMatrix& x, double tol, int max_iters) {
  if (!(tol > 0.0)) throw ParameterError("mvee: tol must be > 0");
  const int n = x.n();
  const int p = x.p();
  if (max_iters <= 0) max_iters = 10 * n;

  const Matrix pts = x.values().transpose();  // p x n
  {
    const Vector mean = pts.rowwise().mean();
    const Matrix centred = pts.colwise() - mean;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(centred * centred.transpose());
    const double top = eig.eigenvalues().maxCoeff();
    if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * top)
      throw NumericalError(
          "mvee: points do not span R^" + std::to_string(p) +
          " (degenerate point set); add jitter or reduce the dimension first");
  }

  const int d = p + 1;
  Matrix q(d, n);
  q.topRows(p) = pts;
  q.row(p).setOnes();

  Vector u = Vector::Constant(n, 1.0 / n);
  MveeResult res;
  Vector m(n);
  for (int it = 0; it < max_iters; ++it) {
    res.iterations = it + 1;
    const Matrix xmat = q * u.asDiagonal() * q.transpose();
    Eigen::LLT<Matrix> llt(xmat);
    if (llt.info() != Eigen::Success) throw NumericalError("mvee: weighted scatter is singular");
    const Matrix solved = llt.solve(q);
    m = (q.array() * solved.array()).colwise().sum().transpose();

    Eigen::Index up = 0;
    const double kmax = m.maxCoeff(&up);
    Eigen::Index down = -1;
    double kmin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
      if (u(j) > 0.0 && m(j) < kmin) {
        kmin = m(j);
        down = j;
      }
    const double eps_up = kmax / d - 1.0;
    const double eps_down = 1.0 - kmin / d;
    if (eps_up <= tol && eps_down <= tol) {
      res.converged = true;
      break;
    }
    if (eps_up >= eps_down) {
      const double step = (kmax - d) / (d * (kmax - 1.0));
      u *= (1.0 - step);
      u(up) += step;
    } else {
      double step = (d - kmin) / (d * (kmin - 1.0));
      step = std::min(step, u(down) / (1.0 - u(down)));
      u *= (1.0 + step);
      u(down) -= step;
      if (u(down) < 0.0) u(down) = 0.0;
    }
  }

  const Vector centre = pts * u;
  const Matrix scatter = pts * u.asDiagonal() * pts.transpose() - centre * centre.transpose();
  Matrix shape = scatter.inverse() / static_cast<double>(p);
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    const Vector diff = pts.col(j) - centre;
    worst = std::max(worst, diff.dot(shape * diff));
  }
  if (worst > 1.0) shape /= worst;

  res.ellipsoid.center = centre;
  res.ellipsoid.volume = unit_ball_volume(p) / std::sqrt(shape.determinant());
  res.ellipsoid.shape = std::move(shape);
  if (!res.converged)
    res.warnings.push_back("mvee: tolerance not reached in " + std::to_string(max_iters) +
                           " iterations; returning best iterate");
  return res;
}

double elicit_beta_sigma(double volume, int k, int p) {
  if (!(volume > 0.0)) throw ParameterError("volume must be > 0");
  if (k < 1) throw ParameterError("k must be >= 1");
  return 0.5 * std::pow(volume / (k * unit_ball_volume(p)), 1.0 / p);
}

PriorConfig PriorConfig::with_defaults(int k, double beta_sigma) {
  PriorConfig cfg;
  cfg.k = k;
  cfg.beta_sigma = beta_sigma;
  cfg.dirichlet_conc = 1.0 / k;
  return cfg;
}

void PriorConfig::validate() const {
  if (k < 1) throw ParameterError("k must be >= 1");
  if (!(beta_sigma > 0.0)) throw ParameterError("beta_sigma must be > 0");
  if (!(alpha_shape > 0.0) || !(alpha_rate > 0.0)) throw ParameterError("alpha prior parameters must be > 0");
  if (!(sigma_shape > 0.0)) throw ParameterError("sigma prior shape must be > 0");
  if (!(dirichlet_conc > 0.0)) throw ParameterError("dirichlet_conc must be > 0");
}

double shifted_gamma_log_density(double alpha, double shape, double rate) {
  if (!(alpha >= 1.0)) return -std::numeric_limits<double>::infinity();
  const double x = std::max(alpha - 1.0, kAlphaFloor);
  return (shape - 1.0) * std::log(x) - rate * x + shape * std::log(rate) - std::lgamma(shape);
}

double inverse_gamma_log_density(double x, double shape, double scale) {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double prior_log_densities(const ClusterParams& params, const PriorConfig& cfg) {
  double total = 0.0;
  for (int h = 0; h < params.k(); ++h) {
    total += shifted_gamma_log_density(params.alpha(h), cfg.alpha_shape, cfg.alpha_rate);
    total += inverse_gamma_log_density(params.sigma(h), cfg.sigma_shape, cfg.beta_sigma);
  }
  return total;
}

}  // namespace bdc
