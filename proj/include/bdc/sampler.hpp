#pragma once

#include "bdc/assignment.hpp"
#include "bdc/common.hpp"
#include "bdc/distmat.hpp"
#include "bdc/likelihood.hpp"
#include "bdc/priors.hpp"

#include <optional>

namespace bdc {

enum class InitMethod { Spectral, Random, Given };

/// How C'C = diag(n_h) is continued into the simplex interior.
///   ColumnSums: diag(1'W), smooth everywhere, vanishing for empty columns.
///   Gram:       (W'W + 1e-12 I)^{-1}; near-singular once a cluster empties.
enum class RelaxedCounts { ColumnSums, Gram };

/// Energies entering the accept step of hmc_step.
///   Vertex:        [U(C) + K(Q)] - [U(C*) + K(Q*)], U at one-hot matrices.
///   Relaxed:       [U(W) + K(Q)] - [U(W*) + K(Q*)], U at the lifted start
///                  and end of the trajectory (standard HMC energy).
///   Potential:     U(C) - U(C*); the trajectory only proposes C*.
/// With the one-hot energy, the kinetic drop earned by climbing the relaxed
/// surface is never paid back, so Vertex accepts almost every proposal.
enum class AcceptEnergy { Vertex, Relaxed, Potential };

struct SamplerConfig {
  int leapfrog_steps = 10;
  double stepsize = 0.1;
  double momentum_sd = 1.0;
  double temperature = 0.1;
  int iterations = 1000;
  /// Negative means 20% of iterations.
  int burn_in = -1;
  int thin = 1;
  std::uint64_t seed = 1;
  bool include_label_prior = true;
  double rw_sd = 0.3;
  /// Mass the canonical logits put on the assigned label.
  double vertex_mass = 1.0 - 1e-4;
  RelaxedCounts relaxed_counts = RelaxedCounts::ColumnSums;
  AcceptEnergy accept_energy = AcceptEnergy::Potential;
  InitMethod init = InitMethod::Spectral;
  int chains = 1;
  int threads = 1;

  [[nodiscard]] int resolved_burn_in() const { return burn_in < 0 ? iterations / 5 : burn_in; }
  void validate() const;
};

/// Tempered softmax, row-wise: w_ih = exp(v_ih / t) / sum_h' exp(v_ih' / t).
Matrix lift(const Matrix& v, double temperature);

/// Row-wise argmax; ties go to the lowest index.
Assignment project_to_vertex(const Matrix& w);

/// Logits placing `vertex_mass` on each assigned label under lift(., t).
Matrix canonical_logits(const Assignment& c, double temperature, double vertex_mass = 1.0 - 1e-4);

/// Distances prepared for sampling: off-diagonal zeros raised to a floor so
/// log D stays finite.
struct DistanceModel {
  Matrix d;
  Matrix log_d;
  double floor = 0.0;
  int floored_pairs = 0;

  explicit DistanceModel(const DistanceMatrix& dist, double floor_fraction = 1e-6);
  [[nodiscard]] int n() const { return static_cast<int>(d.rows()); }
  [[nodiscard]] DistanceMatrix as_distance_matrix() const { return DistanceMatrix::unchecked(d); }
};

struct PotentialTerms {
  double log_distance_term = 0.0;
  double distance_term = 0.0;
  double normalizer = 0.0;
  double label_prior = 0.0;

  /// -log_distance_term + distance_term - normalizer - label_prior
  [[nodiscard]] double value() const { return -log_distance_term + distance_term - normalizer - label_prior; }
};

/// Potential energy U(W) of the relaxed assignment and its gradients.
///
/// At a one-hot W, -U equals total_log_likelihood on the same state (the
/// normalizer and label prior included), so vertex energies can be taken
/// from either.
class Potential {
 public:
  Potential(const DistanceModel& model, const ClusterParams& params, const MixtureWeights& weights,
            bool include_label_prior, RelaxedCounts counts = RelaxedCounts::ColumnSums);

  [[nodiscard]] PotentialTerms terms(const Matrix& w) const;
  [[nodiscard]] double value(const Matrix& w) const { return terms(w).value(); }
  [[nodiscard]] Matrix grad_w(const Matrix& w) const;
  /// Gradient with respect to the logits through lift(., t).
  [[nodiscard]] Matrix grad_v(const Matrix& v, double temperature) const;
  /// U at a hard assignment, from the likelihood module.
  [[nodiscard]] double vertex_value(const Assignment& c) const;

 private:
  const DistanceModel& model_;
  const ClusterParams& params_;
  const MixtureWeights& weights_;
  bool include_label_prior_;
  RelaxedCounts counts_;
  Vector log_pi_;
  Vector norm_const_;  // lgamma(alpha_h) + alpha_h log sigma_h
};

struct ChainState {
  Matrix logits;
  Assignment assignment;
  ClusterParams params;
  MixtureWeights weights;
};

struct HmcOutcome {
  bool accepted = false;
  bool nonfinite = false;
  double log_accept_ratio = 0.0;
};

/// One lift-and-project HMC move on the assignment. The endpoint of the
/// trajectory is projected to a vertex C* and accepted with probability
/// min{1, exp(delta)}, delta set by cfg.accept_energy; on acceptance the
/// logits are reset to the canonical configuration of C*.
HmcOutcome hmc_step(ChainState& state, const DistanceModel& model, const SamplerConfig& cfg, Rng& rng);

/// sigma_h | rest ~ InvGamma(shape0 + alpha_h (n_h - 1), beta + (1/n_h) sum_{i != i'} d_ii')
/// for n_h > 1, and the prior InvGamma(shape0, beta) otherwise.
Vector gibbs_sigma(const DistanceMatrix& d, const Assignment& c, const Vector& alpha, const PriorConfig& prior,
                   Rng& rng);

/// Dirichlet(conc + n_1, ..., conc + n_k)
Vector gibbs_pi(const Assignment& c, double dirichlet_conc, Rng& rng);

struct MhAlphaResult {
  Vector alpha;
  int accepted = 0;
  int proposed = 0;
};

/// Random-walk Metropolis on log(alpha_h - 1 + 1e-10), one proposal per
/// cluster. Targets the cluster likelihood times the shifted-Gamma prior.
MhAlphaResult mh_alpha(const DistanceMatrix& d, const Assignment& c, const Vector& alpha, const Vector& sigma,
                       const PriorConfig& prior, double rw_sd, Rng& rng);

struct MoveStats {
  long proposed = 0;
  long accepted = 0;
  [[nodiscard]] double rate() const { return proposed ? static_cast<double>(accepted) / proposed : 0.0; }
};

/// Retained draws of a run. Partitions are stored as label vectors; the
/// per-draw CC' is materialized on demand and the running sum is kept.
struct Trace {
  int n = 0;
  int k = 0;
  std::vector<Labels> draws;
  Matrix coassign_sum;
  std::vector<Vector> sigma_draws;
  std::vector<Vector> alpha_draws;
  std::vector<Vector> pi_draws;
  std::vector<double> log_likelihood;
  std::vector<double> log_target;
  MoveStats hmc;
  MoveStats alpha_moves;
  long nonfinite_energy = 0;
  std::vector<std::string> warnings;

  [[nodiscard]] size_t size() const { return draws.size(); }
  [[nodiscard]] Matrix coassignment_draw(size_t m) const;
  /// Appends another chain's draws.
  void merge(const Trace& other);
};

/// One chain. Deterministic given (cfg.seed, chain_id).
Trace run_chain(const DistanceMatrix& d, const SamplerConfig& cfg, const PriorConfig& prior,
                const std::optional<Assignment>& init = std::nullopt, std::uint64_t chain_id = 0);

/// cfg.chains independent chains on up to cfg.threads threads, merged in
/// chain order.
Trace run_chains(const DistanceMatrix& d, const SamplerConfig& cfg, const PriorConfig& prior,
                 const std::optional<Assignment>& init = std::nullopt);

}  // namespace bdc
