#include "bdc/summaries.hpp"

#include "bdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace bdc {
namespace {

double objective(const Matrix& s, const Matrix& p) { return (s - p * p.transpose()).squaredNorm(); }

Matrix project_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = project_to_simplex(m.row(i).transpose()).transpose();
  return out;
}

Matrix plus_plus_init(const Matrix& s, int k, Rng& rng) {
  const Eigen::Index n = s.rows();
  std::vector<Eigen::Index> centres;
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centres.push_back(first(rng));
  Vector closest = (s.rowwise() - s.row(centres[0])).rowwise().squaredNorm();
  while (static_cast<int>(centres.size()) < k) {
    Eigen::Index far = 0;
    closest.maxCoeff(&far);
    centres.push_back(far);
    closest = closest.cwiseMin((s.rowwise() - s.row(far)).rowwise().squaredNorm());
  }
  Matrix p = Matrix::Constant(n, k, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int h = 0; h < k; ++h) {
      const double d = (s.row(i) - s.row(centres[h])).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = h;
      }
    }
    p(i, best) = 1.0;
  }
  // Slightly off the vertices so every coordinate can move.
  return project_rows(0.9 * p + Matrix::Constant(n, k, 0.1 / k));
}

Matrix dirichlet_init(Eigen::Index n, int k, Rng& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Matrix p(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int h = 0; h < k; ++h) p(i, h) = g(rng);
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

AssignProbMatrix descend(const Matrix& s, Matrix p, double tol, int max_iters) {
  AssignProbMatrix res;
  double f = objective(s, p);
  res.history.push_back(f);
  double step = 1.0 / std::max(1.0, 4.0 * s.rows());
  for (int it = 0; it < max_iters; ++it) {
    res.iterations = it + 1;
    const Matrix grad = -4.0 * (s - p * p.transpose()) * p;
    Matrix next;
    double f_next = 0.0;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      next = project_rows(p - step * grad);
      const Matrix delta = next - p;
      f_next = objective(s, next);
      // Sufficient decrease for projected gradient.
      if (f_next <= f + (grad.array() * delta.array()).sum() + 0.5 / step * delta.squaredNorm()) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved || f_next > f) {
      res.converged = true;
      break;
    }
    const double change = f - f_next;
    p = std::move(next);
    f = f_next;
    res.history.push_back(f);
    step *= 2.0;
    if (change <= tol * std::max(1.0, f)) {
      res.converged = true;
      break;
    }
  }
  res.values = std::move(p);
  res.objective = f;
  return res;
}

}  // namespace

CoAssignmentMatrix coassignment_from_trace(const Trace& trace) {
  if (trace.size() == 0) throw ValidationError("co-assignment: trace has no retained draws");
  CoAssignmentMatrix c;
  c.n_draws = static_cast<long>(trace.size());
  c.values = trace.coassign_sum / static_cast<double>(trace.size());
  c.values.diagonal().setOnes();
  return c;
}

double vi_distance(std::span<const int> a, std::span<const int> b) {
  const Matrix t = contingency_table(a, b);
  const double n = static_cast<double>(a.size());
  const Vector ra = t.rowwise().sum();
  const Vector cb = t.colwise().sum().transpose();
  double vi = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      const double nij = t(i, j);
      if (nij <= 0.0) continue;
      // -sum p_ij [log(p_ij / p_i) + log(p_ij / p_j)]
      vi -= nij / n * (std::log(nij / ra(i)) + std::log(nij / cb(j)));
    }
  return std::max(vi, 0.0);
}

double expected_vi(const Trace& trace, std::span<const int> labels) {
  if (trace.size() == 0) throw ValidationError("expected VI: trace has no retained draws");
  double total = 0.0;
  for (const auto& d : trace.draws) total += vi_distance(labels, d);
  return total / static_cast<double>(trace.size());
}

PointEstimate point_estimate_vi(const Trace& trace) {
  if (trace.size() == 0) throw ValidationError("point estimate: trace has no retained draws");
  std::map<Labels, size_t> index_of;
  std::vector<Labels> distinct;
  std::vector<long> first_draw;
  std::vector<double> weight;
  for (size_t m = 0; m < trace.size(); ++m) {
    Labels canon = canonical_labels(trace.draws[m]);
    auto [it, inserted] = index_of.try_emplace(canon, distinct.size());
    if (inserted) {
      distinct.push_back(std::move(canon));
      first_draw.push_back(static_cast<long>(m));
      weight.push_back(0.0);
    }
    weight[it->second] += 1.0;
  }
  const size_t dn = distinct.size();
  Matrix vi = Matrix::Zero(dn, dn);
  for (size_t a = 0; a < dn; ++a)
    for (size_t b = a + 1; b < dn; ++b) vi(a, b) = vi(b, a) = vi_distance(distinct[a], distinct[b]);
  const double total = static_cast<double>(trace.size());
  size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < dn; ++a) {
    double e = 0.0;
    for (size_t b = 0; b < dn; ++b) e += weight[b] * vi(a, b);
    e /= total;
    // Candidates are in first-draw order, so strict < keeps the earliest on ties.
    if (e < best_val - 1e-12) {
      best_val = e;
      best = a;
    }
  }
  PointEstimate pe;
  pe.labels = distinct[best];
  pe.expected_vi = best_val;
  pe.draw_index = first_draw[best];
  pe.distinct_partitions = static_cast<long>(dn);
  pe.uncertainty = uncertainty(pe.labels, trace);
  return pe;
}

Vector project_to_simplex(const Vector& v) {
  const Eigen::Index k = v.size();
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0).matrix();
}

AssignProbMatrix simplex_factorize(const CoAssignmentMatrix& coassign, int k, Rng& rng, double tol, int max_iters,
                                   int n_restarts) {
  if (k < 1) throw ParameterError("simplex factorization: k must be >= 1");
  if (n_restarts < 1) throw ParameterError("simplex factorization: n_restarts must be >= 1");
  const Matrix& s = coassign.values;
  if (s.rows() != s.cols()) throw ValidationError("simplex factorization: co-assignment matrix must be square");
  const Eigen::Index n = s.rows();
  if (k == 1) {
    AssignProbMatrix res;
    res.values = Matrix::Ones(n, 1);
    res.objective = objective(s, res.values);
    res.history = {res.objective};
    res.converged = true;
    return res;
  }
  AssignProbMatrix best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int r = 0; r < n_restarts; ++r) {
    Matrix init = r == 0 && n >= k ? plus_plus_init(s, k, rng) : dirichlet_init(n, k, rng);
    AssignProbMatrix res = descend(s, std::move(init), tol, max_iters);
    res.best_restart = r;
    if (res.objective < best.objective) best = std::move(res);
  }
  if (!best.converged)
    best.warnings.push_back("simplex factorization: not converged after " + std::to_string(max_iters) +
                            " iterations; returning best iterate");
  return best;
}

Vector uncertainty(std::span<const int> point_labels, const Trace& trace) {
  const int n = static_cast<int>(point_labels.size());
  if (trace.size() == 0) throw ValidationError("uncertainty: trace has no retained draws");
  if (trace.n != n) throw ValidationError("uncertainty: label length does not match the trace");
  const Labels est = canonical_labels(point_labels);
  const int ke = count_labels(est);
  std::vector<int> est_size(ke, 0);
  for (int l : est) ++est_size[l];

  Vector agree = Vector::Zero(n);
  std::vector<int> table;
  std::vector<int> draw_size;
  for (const auto& draw : trace.draws) {
    int kd = 0;
    for (int l : draw) kd = std::max(kd, l + 1);
    table.assign(static_cast<size_t>(ke) * kd, 0);
    draw_size.assign(kd, 0);
    for (int i = 0; i < n; ++i) {
      ++table[static_cast<size_t>(est[i]) * kd + draw[i]];
      ++draw_size[draw[i]];
    }
    for (int i = 0; i < n; ++i) {
      const int peers = est_size[est[i]] - 1;
      if (peers == 0) {
        if (draw_size[draw[i]] == 1) agree(i) += 1.0;
        continue;
      }
      const int with = table[static_cast<size_t>(est[i]) * kd + draw[i]] - 1;
      if (2 * with > peers) agree(i) += 1.0;
    }
  }
  return (1.0 - agree.array() / static_cast<double>(trace.size())).matrix();
}

}  // namespace bdc
