#include "bdc/sampler.hpp"

#include "bdc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace bdc {
namespace {

constexpr double kGramRidge = 1e-12;

double safe_log(double x) { return x > 0.0 ? std::log(x) : std::log(std::numeric_limits<double>::min()); }

// Per-cluster pair sums over ordered pairs within each cluster.
struct ClusterSums {
  std::vector<double> dist;
  std::vector<double> log_dist;
  std::vector<int> zero_pairs;
};

ClusterSums cluster_sums(const DistanceMatrix& d, const Assignment& c) {
  ClusterSums s{std::vector<double>(c.k(), 0.0), std::vector<double>(c.k(), 0.0), std::vector<int>(c.k(), 0)};
  for (int i = 0; i < c.n(); ++i) {
    const int h = c[i];
    for (int j = i + 1; j < c.n(); ++j) {
      if (c[j] != h) continue;
      const double v = d(i, j);
      s.dist[h] += 2.0 * v;
      if (v > 0.0)
        s.log_dist[h] += 2.0 * std::log(v);
      else
        s.zero_pairs[h] += 2;
    }
  }
  return s;
}

double gamma_draw(double shape, Rng& rng) { return std::gamma_distribution<double>(shape, 1.0)(rng); }

}  // namespace

void SamplerConfig::validate() const {
  if (leapfrog_steps < 1) throw ParameterError("leapfrog_steps must be >= 1");
  if (!(stepsize > 0.0)) throw ParameterError("stepsize must be > 0");
  if (!(momentum_sd > 0.0)) throw ParameterError("momentum_sd must be > 0");
  if (!(temperature > 0.0)) throw ParameterError("temperature must be > 0");
  if (iterations < 1) throw ParameterError("iterations must be >= 1");
  if (resolved_burn_in() >= iterations) throw ParameterError("burn_in must be < iterations");
  if (thin < 1) throw ParameterError("thin must be >= 1");
  if (!(rw_sd >= 0.0)) throw ParameterError("rw_sd must be >= 0");
  if (!(vertex_mass > 0.0 && vertex_mass < 1.0)) throw ParameterError("vertex_mass must be in (0, 1)");
  if (chains < 1) throw ParameterError("chains must be >= 1");
  if (threads < 1) throw ParameterError("threads must be >= 1");
}

Matrix lift(const Matrix& v, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be > 0");
  Matrix w(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double top = v.row(i).maxCoeff();
    double total = 0.0;
    for (Eigen::Index h = 0; h < v.cols(); ++h) {
      w(i, h) = std::exp((v(i, h) - top) / temperature);
      total += w(i, h);
    }
    w.row(i) /= total;
  }
  return w;
}

Assignment project_to_vertex(const Matrix& w) {
  Labels labels(w.rows());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    int best = 0;
    for (Eigen::Index h = 1; h < w.cols(); ++h)
      if (w(i, h) > w(i, best)) best = static_cast<int>(h);
    labels[i] = best;
  }
  return Assignment(std::move(labels), static_cast<int>(w.cols()));
}

Matrix canonical_logits(const Assignment& c, double temperature, double vertex_mass) {
  const int k = c.k();
  // w = 1 / (1 + (k - 1) exp(-m / t)) >= vertex_mass
  const double margin =
      k > 1 ? temperature * std::log((k - 1) * vertex_mass / (1.0 - vertex_mass)) : temperature;
  Matrix v = Matrix::Zero(c.n(), k);
  for (int i = 0; i < c.n(); ++i) v(i, c[i]) = std::max(margin, 0.0);
  return v;
}

DistanceModel::DistanceModel(const DistanceMatrix& dist, double floor_fraction) : d(dist.values()) {
  const int n = dist.n();
  double median = dist.median_offdiagonal();
  if (!(median > 0.0)) {
    double top = d.maxCoeff();
    median = top > 0.0 ? top : 1.0;
  }
  floor = floor_fraction * median;
  log_d = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (d(i, j) < floor) {
        d(i, j) = floor;
        ++floored_pairs;
      }
      log_d(i, j) = std::log(d(i, j));
    }
  floored_pairs /= 2;
}

Potential::Potential(const DistanceModel& model, const ClusterParams& params, const MixtureWeights& weights,
                     bool include_label_prior, RelaxedCounts counts)
    : model_(model),
      params_(params),
      weights_(weights),
      include_label_prior_(include_label_prior),
      counts_(counts),
      log_pi_(weights.pi.size()),
      norm_const_(params.k()) {
  for (Eigen::Index h = 0; h < weights.pi.size(); ++h) log_pi_(h) = safe_log(weights.pi(h));
  for (int h = 0; h < params.k(); ++h)
    norm_const_(h) = std::lgamma(params.alpha(h)) + params.alpha(h) * std::log(params.sigma(h));
}

PotentialTerms Potential::terms(const Matrix& w) const {
  PotentialTerms t;
  const Vector shape_excess = params_.alpha.array() - 1.0;
  const Vector inv_sigma = params_.sigma.cwiseInverse();
  const Matrix lw = model_.log_d * w;
  const Matrix dw = model_.d * w;
  const Vector col = w.colwise().sum().transpose();

  if (counts_ == RelaxedCounts::ColumnSums) {
    for (Eigen::Index h = 0; h < w.cols(); ++h) {
      if (col(h) <= 0.0) continue;
      t.log_distance_term += shape_excess(h) * w.col(h).dot(lw.col(h)) / col(h);
      t.distance_term += inv_sigma(h) * w.col(h).dot(dw.col(h)) / col(h);
    }
  } else {
    Matrix g = w.transpose() * w;
    g.diagonal().array() += kGramRidge;
    const Matrix ginv = g.ldlt().solve(Matrix::Identity(g.rows(), g.cols()));
    t.log_distance_term = ((w.transpose() * lw) * shape_excess.asDiagonal() * ginv).trace();
    t.distance_term = ((w.transpose() * dw) * ginv * inv_sigma.asDiagonal()).trace();
  }

  for (Eigen::Index h = 0; h < w.cols(); ++h)
    if (col(h) > 1.0) t.normalizer -= (col(h) - 1.0) * norm_const_(h);
  if (include_label_prior_) t.label_prior = (w * log_pi_).sum();
  return t;
}

Matrix Potential::grad_w(const Matrix& w) const {
  const Eigen::Index k = w.cols();
  const Vector shape_excess = params_.alpha.array() - 1.0;
  const Vector inv_sigma = params_.sigma.cwiseInverse();
  const Matrix lw = model_.log_d * w;
  const Matrix dw = model_.d * w;
  const Vector col = w.colwise().sum().transpose();
  Matrix grad = Matrix::Zero(w.rows(), k);

  if (counts_ == RelaxedCounts::ColumnSums) {
    // d/dW of a_h (w_h' X w_h) / s_h = a_h [2 X w_h / s_h - (w_h' X w_h) / s_h^2]
    for (Eigen::Index h = 0; h < k; ++h) {
      if (col(h) <= 0.0) continue;
      const double ql = w.col(h).dot(lw.col(h));
      const double qd = w.col(h).dot(dw.col(h));
      const double s = col(h);
      grad.col(h) -= shape_excess(h) * (2.0 * lw.col(h) / s - Vector::Constant(w.rows(), ql / (s * s)));
      grad.col(h) += inv_sigma(h) * (2.0 * dw.col(h) / s - Vector::Constant(w.rows(), qd / (s * s)));
    }
  } else {
    // f(X, A) = tr(W'XW A G^{-1}), G = W'W:
    //   grad = X W (A G^{-1} + G^{-1} A) - W (B + B'),  B = G^{-1} (W'XW) A G^{-1}
    Matrix g = w.transpose() * w;
    g.diagonal().array() += kGramRidge;
    const Matrix ginv = g.ldlt().solve(Matrix::Identity(k, k));
    auto trace_grad = [&](const Matrix& xw, const Matrix& a) -> Matrix {
      const Matrix m = w.transpose() * xw;
      const Matrix b = ginv * m * a * ginv;
      return xw * (a * ginv + ginv * a) - w * (b + b.transpose());
    };
    grad -= trace_grad(lw, shape_excess.asDiagonal());
    grad += trace_grad(dw, inv_sigma.asDiagonal());
  }

  for (Eigen::Index h = 0; h < k; ++h)
    if (col(h) > 1.0) grad.col(h).array() -= -norm_const_(h);
  if (include_label_prior_) grad.rowwise() -= log_pi_.transpose();
  return grad;
}

Matrix Potential::grad_v(const Matrix& v, double temperature) const {
  const Matrix w = lift(v, temperature);
  const Matrix gw = grad_w(w);
  Matrix gv(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double mean = w.row(i).dot(gw.row(i));
    for (Eigen::Index h = 0; h < v.cols(); ++h) gv(i, h) = w(i, h) * (gw(i, h) - mean) / temperature;
  }
  return gv;
}

double Potential::vertex_value(const Assignment& c) const {
  return -total_log_likelihood(model_.as_distance_matrix(), c, params_, weights_, include_label_prior_);
}

HmcOutcome hmc_step(ChainState& state, const DistanceModel& model, const SamplerConfig& cfg, Rng& rng) {
  HmcOutcome out;
  const int n = state.assignment.n();
  const int k = state.assignment.k();
  const Potential potential(model, state.params, state.weights, cfg.include_label_prior, cfg.relaxed_counts);

  std::normal_distribution<double> normal(0.0, cfg.momentum_sd);
  Matrix q(n, k);
  for (int i = 0; i < n; ++i)
    for (int h = 0; h < k; ++h) q(i, h) = normal(rng);
  const double inv_mass = 1.0 / (cfg.momentum_sd * cfg.momentum_sd);
  const double kinetic0 = 0.5 * q.squaredNorm() * inv_mass;

  Matrix v = state.logits;
  const double eps = cfg.stepsize;
  q -= 0.5 * eps * potential.grad_v(v, cfg.temperature);
  for (int l = 0; l < cfg.leapfrog_steps; ++l) {
    v += eps * inv_mass * q;
    if (l + 1 < cfg.leapfrog_steps) q -= eps * potential.grad_v(v, cfg.temperature);
  }
  q -= 0.5 * eps * potential.grad_v(v, cfg.temperature);
  const double kinetic1 = 0.5 * q.squaredNorm() * inv_mass;

  const Matrix w_end = lift(v, cfg.temperature);
  Assignment proposal = project_to_vertex(w_end);
  const double u0 = potential.vertex_value(state.assignment);
  const double u1 = proposal == state.assignment ? u0 : potential.vertex_value(proposal);
  switch (cfg.accept_energy) {
    case AcceptEnergy::Vertex:
      out.log_accept_ratio = (u0 + kinetic0) - (u1 + kinetic1);
      break;
    case AcceptEnergy::Relaxed:
      out.log_accept_ratio = (potential.value(lift(state.logits, cfg.temperature)) + kinetic0) -
                             (potential.value(w_end) + kinetic1);
      break;
    case AcceptEnergy::Potential:
      out.log_accept_ratio = u0 - u1;
      break;
  }
  if (!std::isfinite(out.log_accept_ratio)) {
    out.nonfinite = true;
    return out;
  }
  const double log_u = std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  if (out.log_accept_ratio >= 0.0 || log_u < out.log_accept_ratio) {
    out.accepted = true;
    state.assignment = std::move(proposal);
    state.logits = canonical_logits(state.assignment, cfg.temperature, cfg.vertex_mass);
  }
  return out;
}

Vector gibbs_sigma(const DistanceMatrix& d, const Assignment& c, const Vector& alpha, const PriorConfig& prior,
                   Rng& rng) {
  const ClusterSums sums = cluster_sums(d, c);
  Vector sigma(c.k());
  for (int h = 0; h < c.k(); ++h) {
    const int nh = c.counts()[h];
    double shape = prior.sigma_shape;
    double scale = prior.beta_sigma;
    if (nh > 1) {
      shape += alpha(h) * (nh - 1);
      scale += sums.dist[h] / nh;
    }
    // 1/sigma ~ Gamma(shape, rate = scale)
    sigma(h) = scale / gamma_draw(shape, rng);
  }
  return sigma;
}

Vector gibbs_pi(const Assignment& c, double dirichlet_conc, Rng& rng) {
  if (!(dirichlet_conc > 0.0)) throw ParameterError("dirichlet_conc must be > 0");
  Vector g(c.k());
  for (int h = 0; h < c.k(); ++h) g(h) = gamma_draw(dirichlet_conc + c.counts()[h], rng);
  double total = g.sum();
  if (!(total > 0.0)) {
    // Every component underflowed; fall back to the occupied counts.
    for (int h = 0; h < c.k(); ++h) g(h) = dirichlet_conc + c.counts()[h];
    total = g.sum();
  }
  return g / total;
}

MhAlphaResult mh_alpha(const DistanceMatrix& d, const Assignment& c, const Vector& alpha, const Vector& sigma,
                       const PriorConfig& prior, double rw_sd, Rng& rng) {
  constexpr double kShift = 1e-10;
  const ClusterSums sums = cluster_sums(d, c);
  MhAlphaResult res{alpha, 0, 0};
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (int h = 0; h < c.k(); ++h) {
    const int nh = c.counts()[h];
    auto log_post = [&](double a) {
      double lp = shifted_gamma_log_density(a, prior.alpha_shape, prior.alpha_rate);
      if (nh > 1) {
        const double excess = a - 1.0;
        double log_term = 0.0;
        if (excess > 0.0)
          log_term = sums.zero_pairs[h] > 0 ? -std::numeric_limits<double>::infinity()
                                            : excess * sums.log_dist[h] / nh;
        lp += (nh - 1) * (-std::lgamma(a) - a * std::log(sigma(h))) + log_term - sums.dist[h] / (nh * sigma(h));
      }
      return lp;
    };
    const double current = res.alpha(h);
    const double z = normal(rng);
    const double u_cur = std::log(current - 1.0 + kShift);
    const double step = rw_sd * z;
    const double proposed = step == 0.0 ? current : std::exp(u_cur + step) + 1.0 - kShift;
    ++res.proposed;
    const double draw = unif(rng);
    if (!(proposed >= 1.0)) continue;
    const double log_ratio = log_post(proposed) - log_post(current) + step;
    if (log_ratio >= 0.0 || std::log(draw) < log_ratio) {
      res.alpha(h) = proposed;
      ++res.accepted;
    }
  }
  return res;
}

Matrix Trace::coassignment_draw(size_t m) const {
  const Labels& l = draws.at(m);
  Matrix cc(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cc(i, j) = l[i] == l[j] ? 1.0 : 0.0;
  return cc;
}

void Trace::merge(const Trace& other) {
  if (draws.empty() && coassign_sum.size() == 0) {
    *this = other;
    return;
  }
  if (other.n != n || other.k != k) throw ValidationError("cannot merge traces of different shapes");
  draws.insert(draws.end(), other.draws.begin(), other.draws.end());
  coassign_sum += other.coassign_sum;
  sigma_draws.insert(sigma_draws.end(), other.sigma_draws.begin(), other.sigma_draws.end());
  alpha_draws.insert(alpha_draws.end(), other.alpha_draws.begin(), other.alpha_draws.end());
  pi_draws.insert(pi_draws.end(), other.pi_draws.begin(), other.pi_draws.end());
  log_likelihood.insert(log_likelihood.end(), other.log_likelihood.begin(), other.log_likelihood.end());
  log_target.insert(log_target.end(), other.log_target.begin(), other.log_target.end());
  hmc.proposed += other.hmc.proposed;
  hmc.accepted += other.hmc.accepted;
  alpha_moves.proposed += other.alpha_moves.proposed;
  alpha_moves.accepted += other.alpha_moves.accepted;
  nonfinite_energy += other.nonfinite_energy;
  warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
}

namespace {

double log_dirichlet_density(const Vector& pi, double conc) {
  const int k = static_cast<int>(pi.size());
  double lp = std::lgamma(conc * k) - k * std::lgamma(conc);
  for (int h = 0; h < k; ++h) lp += (conc - 1.0) * safe_log(pi(h));
  return lp;
}

}  // namespace

Trace run_chain(const DistanceMatrix& d, const SamplerConfig& cfg, const PriorConfig& prior,
                const std::optional<Assignment>& init, std::uint64_t chain_id) {
  cfg.validate();
  prior.validate();
  const int n = d.n();
  const int k = prior.k;
  Rng rng = make_rng(cfg.seed, chain_id);

  Trace trace;
  trace.n = n;
  trace.k = k;
  trace.coassign_sum = Matrix::Zero(n, n);
  if (n < k) trace.warnings.push_back("n < k: some clusters are necessarily empty");

  const DistanceModel model(d);
  if (model.floored_pairs > 0)
    trace.warnings.push_back(std::to_string(model.floored_pairs) +
                             " off-diagonal zero distances raised to " + std::to_string(model.floor));
  const DistanceMatrix work = model.as_distance_matrix();

  ChainState state;
  if (init) {
    if (init->n() != n || init->k() != k) throw ValidationError("initial assignment has the wrong shape");
    state.assignment = *init;
  } else if (cfg.init == InitMethod::Random || k == 1 || n <= k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    Labels labels(n);
    for (auto& l : labels) l = k == 1 ? 0 : pick(rng);
    state.assignment = Assignment(std::move(labels), k);
  } else {
    state.assignment = Assignment(spectral_clustering(work, k, rng), k);
  }
  state.logits = canonical_logits(state.assignment, cfg.temperature, cfg.vertex_mass);
  Vector alpha = Vector::Constant(k, 1.0 + prior.alpha_shape / prior.alpha_rate);
  state.params = ClusterParams(alpha, gibbs_sigma(work, state.assignment, alpha, prior, rng));
  state.weights = MixtureWeights{gibbs_pi(state.assignment, prior.dirichlet_conc, rng), prior.dirichlet_conc};

  const int burn_in = cfg.resolved_burn_in();
  for (int it = 0; it < cfg.iterations; ++it) {
    if (k > 1) {
      const HmcOutcome hmc = hmc_step(state, model, cfg, rng);
      ++trace.hmc.proposed;
      if (hmc.accepted) ++trace.hmc.accepted;
      if (hmc.nonfinite) ++trace.nonfinite_energy;
    }
    state.params.sigma = gibbs_sigma(work, state.assignment, state.params.alpha, prior, rng);
    state.weights.pi = gibbs_pi(state.assignment, prior.dirichlet_conc, rng);
    const MhAlphaResult mh =
        mh_alpha(work, state.assignment, state.params.alpha, state.params.sigma, prior, cfg.rw_sd, rng);
    state.params.alpha = mh.alpha;
    trace.alpha_moves.proposed += mh.proposed;
    trace.alpha_moves.accepted += mh.accepted;

    if (it >= burn_in && (it - burn_in) % cfg.thin == 0) {
      const Labels& l = state.assignment.labels();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (l[i] == l[j]) trace.coassign_sum(i, j) += 1.0;
      trace.draws.push_back(l);
      trace.sigma_draws.push_back(state.params.sigma);
      trace.alpha_draws.push_back(state.params.alpha);
      trace.pi_draws.push_back(state.weights.pi);
      const double ll = total_log_likelihood(work, state.assignment, state.params, state.weights,
                                             cfg.include_label_prior);
      trace.log_likelihood.push_back(ll);
      trace.log_target.push_back(ll + prior_log_densities(state.params, prior) +
                                 log_dirichlet_density(state.weights.pi, prior.dirichlet_conc));
    }
  }
  if (trace.nonfinite_energy > 0)
    trace.warnings.push_back(std::to_string(trace.nonfinite_energy) +
                             " HMC proposals rejected for non-finite energy");
  return trace;
}

Trace run_chains(const DistanceMatrix& d, const SamplerConfig& cfg, const PriorConfig& prior,
                 const std::optional<Assignment>& init) {
  cfg.validate();
  std::vector<Trace> traces(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);
  const int workers = std::min(cfg.threads, cfg.chains);
  auto work = [&](int worker) {
    for (int c = worker; c < cfg.chains; c += workers) {
      try {
        traces[c] = run_chain(d, cfg, prior, init, static_cast<std::uint64_t>(c));
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  Trace merged;
  for (auto& t : traces) merged.merge(t);
  return merged;
}

}  // namespace bdc
