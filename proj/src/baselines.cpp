#include "bdc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bdc {
namespace {

constexpr double kVarianceFloor = 1e-10;

Matrix seed_plus_plus(const Matrix& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Matrix centers(k, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = x.row(first(rng));
  Vector closest = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = closest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        target -= closest(pick);
        if (target < 0.0) break;
      }
    } else {
      pick = first(rng);
    }
    centers.row(c) = x.row(pick);
    closest = closest.cwiseMin((x.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const Matrix& x, Matrix centers, int max_iters) {
  const Eigen::Index n = x.rows();
  const int k = static_cast<int>(centers.rows());
  KMeansResult res;
  res.labels.assign(n, -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dist = (x.row(i) - centers.row(c)).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (res.labels[i] != best) {
        res.labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(res.labels[i]) += x.row(i);
      ++counts[res.labels[i]];
    }
    for (int c = 0; c < k; ++c)
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
  }
  res.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) res.inertia += (x.row(i) - centers.row(res.labels[i])).squaredNorm();
  res.centers = std::move(centers);
  return res;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, int k, Rng& rng, int restarts, int max_iters) {
  if (k < 1) throw ParameterError("kmeans: k must be >= 1");
  if (x.rows() < k) throw ParameterError("kmeans: fewer points than clusters");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    KMeansResult res = lloyd(x, seed_plus_plus(x, k, rng), max_iters);
    if (res.inertia < best.inertia) best = std::move(res);
  }
  return best;
}

Labels spectral_clustering(const DistanceMatrix& d, int k, Rng& rng) {
  const int n = d.n();
  if (k < 1) throw ParameterError("spectral clustering: k must be >= 1");
  if (k == 1) return Labels(n, 0);
  if (n < k) throw ParameterError("spectral clustering: fewer points than clusters");
  double s = d.median_offdiagonal();
  if (!(s > 0.0)) s = 1.0;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = i == j ? 0.0 : std::exp(-d(i, j) * d(i, j) / (2.0 * s * s));
  Vector inv_sqrt_deg = a.rowwise().sum();
  for (int i = 0; i < n; ++i) inv_sqrt_deg(i) = inv_sqrt_deg(i) > 0.0 ? 1.0 / std::sqrt(inv_sqrt_deg(i)) : 0.0;
  // Leading eigenvectors of D^{-1/2} A D^{-1/2} = smallest of the normalized Laplacian.
  const Matrix m = inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw NumericalError("spectral clustering: eigen-solver failed");
  Matrix u = eig.eigenvectors().rightCols(k);
  for (int i = 0; i < n; ++i) {
    const double norm = u.row(i).norm();
    if (norm > 0.0) u.row(i) /= norm;
  }
  return kmeans(u, k, rng).labels;
}

GmmResult gmm_em_diag_fit(const DataMatrix& data, int k, Rng& rng) {
  const Matrix& x = data.values();
  const int n = data.n();
  const int p = data.p();
  if (k < 1) throw ParameterError("gmm: k must be >= 1");
  if (n <= k) throw ParameterError("gmm: requires n > k");

  GmmResult res;
  const KMeansResult init = kmeans(x, k, rng);
  Matrix resp = Matrix::Zero(n, k);
  for (int i = 0; i < n; ++i) resp(i, init.labels[i]) = 1.0;

  bool floored = false;
  auto m_step = [&]() {
    const Vector nk = resp.colwise().sum().transpose();
    res.weights = nk / n;
    res.means = Matrix::Zero(k, p);
    res.variances = Matrix::Zero(k, p);
    const Vector global_var = (x.rowwise() - x.colwise().mean()).array().square().colwise().mean();
    for (int h = 0; h < k; ++h) {
      if (nk(h) <= 0.0) {
        // Empty component: park it at the global moments with negligible weight.
        res.means.row(h) = x.colwise().mean();
        res.variances.row(h) = global_var.transpose();
        continue;
      }
      res.means.row(h) = resp.col(h).transpose() * x / nk(h);
      for (int j = 0; j < p; ++j) {
        double v = resp.col(h).dot((x.col(j).array() - res.means(h, j)).square().matrix()) / nk(h);
        if (v < kVarianceFloor) {
          v = kVarianceFloor;
          floored = true;
        }
        res.variances(h, j) = v;
      }
    }
  };

  auto e_step = [&]() {
    Matrix logp(n, k);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (int h = 0; h < k; ++h) {
      const double lw = res.weights(h) > 0.0 ? std::log(res.weights(h)) : -std::numeric_limits<double>::infinity();
      double lognorm = 0.0;
      for (int j = 0; j < p; ++j) lognorm += -0.5 * (log2pi + std::log(res.variances(h, j)));
      for (int i = 0; i < n; ++i) {
        double q = 0.0;
        for (int j = 0; j < p; ++j) {
          const double z = x(i, j) - res.means(h, j);
          q += z * z / res.variances(h, j);
        }
        logp(i, h) = lw + lognorm - 0.5 * q;
      }
    }
    double ll = 0.0;
    for (int i = 0; i < n; ++i) {
      const double top = logp.row(i).maxCoeff();
      double s = 0.0;
      for (int h = 0; h < k; ++h) s += std::exp(logp(i, h) - top);
      const double lse = top + std::log(s);
      ll += lse;
      for (int h = 0; h < k; ++h) resp(i, h) = std::exp(logp(i, h) - lse);
    }
    return ll;
  };

  m_step();
  double prev = e_step();
  res.log_likelihood.push_back(prev);
  for (int it = 0; it < 500; ++it) {
    m_step();
    const double ll = e_step();
    res.log_likelihood.push_back(ll);
    if (std::abs(ll - prev) <= 1e-8 * std::abs(prev)) {
      res.converged = true;
      break;
    }
    prev = ll;
  }
  if (floored) res.warnings.push_back("gmm: component variance floored at 1e-10 (collapsed component)");
  if (!res.converged) res.warnings.push_back("gmm: not converged after 500 iterations");

  res.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::Index h = 0;
    resp.row(i).maxCoeff(&h);
    res.labels[i] = static_cast<int>(h);
  }
  return res;
}

Labels gmm_em_diag(const DataMatrix& x, int k, Rng& rng) { return gmm_em_diag_fit(x, k, rng).labels; }

}  // namespace bdc
