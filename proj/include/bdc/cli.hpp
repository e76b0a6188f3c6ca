#pragma once

#include "bdc/common.hpp"
#include "bdc/distmat.hpp"
#include "bdc/priors.hpp"
#include "bdc/sampler.hpp"
#include "bdc/summaries.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace bdc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

std::string_view library_version();

/// Everything a run needs. Unset optionals are resolved when the run
/// starts and written back in resolved form to summary.json.
struct RunConfig {
  std::string command = "cluster";

  // Input
  std::string input;
  bool header = false;
  bool validate = true;

  // Distances: minkowski (with q), arccos, subspace, precomputed
  std::string distance = "minkowski";
  double q = 2.0;
  double sparsity_weight = 1.0;
  int pca = 0;
  double jitter = 0.0;

  // Model
  int k = 2;
  std::optional<double> beta_sigma;
  std::optional<double> dirichlet_conc;
  double alpha_shape = 0.5;
  double alpha_rate = 1.0;
  double sigma_shape = 2.0;

  // Sampler; `init` is spectral, random or file:<path>
  SamplerConfig sampler;
  std::string init = "spectral";
  int factor_restarts = 5;

  std::string out = "bdc_out";

  // simulate
  std::string spec;
  // eval
  std::string labels;
  std::string truth;
  // replicate
  std::string table;
  int reps = 10;

  /// Sets one field from its config-file key and textual value.
  void apply(const std::string& key, const std::string& value);
  void validate_config() const;
  [[nodiscard]] nlohmann::json to_json() const;
  /// Accepts a bare config object or a summary.json (uses its "config").
  static RunConfig from_json(const nlohmann::json& j);
  /// JSON object or `key = value` lines (# starts a comment).
  static RunConfig load(const std::filesystem::path& path);
};

/// Config keys understood by RunConfig::apply.
const std::vector<std::string>& config_keys();

struct BdcFit {
  Trace trace;
  CoAssignmentMatrix coassign;
  PointEstimate estimate;
  AssignProbMatrix assign_probs;
  std::vector<std::string> warnings;
};

/// Sampling plus every posterior summary.
BdcFit fit_bdc(const DistanceMatrix& d, const SamplerConfig& cfg, const PriorConfig& prior,
               const std::optional<Assignment>& init = std::nullopt, int factor_restarts = 5);

/// Distances for `cfg.distance` from (already preprocessed) data.
DistanceMatrix distances_for(const DataMatrix& x, const RunConfig& cfg, std::vector<std::string>& warnings);

/// cfg.beta_sigma if set; else from the MVEE of the data when the distance
/// is in coordinate units (Minkowski, arccos); else the median off-diagonal
/// distance / 4.
double resolve_beta_sigma(const RunConfig& cfg, const DataMatrix* x, const DistanceMatrix& d,
                          std::vector<std::string>& warnings);

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Mean with a normal-approximation 95% interval, clipped to [-1, 1].
Interval mean_interval(const std::vector<double>& values);

struct ExperimentRow {
  std::string setting;
  std::vector<std::string> methods;
  /// ARI per method per repetition.
  std::vector<std::vector<double>> ari;
};

struct ExperimentTable {
  std::string id;
  std::string setting_name;
  std::vector<ExperimentRow> rows;
  /// Header plus one line per row: setting, then "mean (lo, hi)" per method.
  void write_csv(std::ostream& os) const;
};

/// Skew-normal mixture (n = 200; skewness 8 and 10; locations 0 and 2) for
/// each p: BDC on Euclidean distances vs diagonal GMM.
ExperimentTable replicate_skew_normal(const std::vector<int>& p_list, int reps, std::uint64_t seed,
                                      const SamplerConfig& sampler);

struct VmfSetting {
  std::string label;
  Vector mu2;
};

/// vMF mixture on the circle (n = 400; kappa 0.25 and 0.3; mu_1 = (1, 0))
/// for each mu_2: BDC on arccos distances vs GMM on the coordinates.
ExperimentTable replicate_vmf(const std::vector<VmfSetting>& settings, int reps, std::uint64_t seed,
                              const SamplerConfig& sampler);

/// The four published mu_2 values, labelled as in the published table
/// (the label is ||mu_1 - mu_2|| to two decimals).
std::vector<VmfSetting> published_vmf_settings();

/// Two 3-dimensional subspaces in R^20, 100 points each, noise sd 0.05:
/// BDC on subspace distances vs spectral clustering on Euclidean distances.
ExperimentTable replicate_subspace(int reps, std::uint64_t seed, const SamplerConfig& sampler,
                                   double sparsity_weight = 1.0);

int cmd_cluster(const RunConfig& cfg, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, std::ostream& log);
int cmd_replicate(const RunConfig& cfg, std::ostream& log);

/// Dispatches on cfg.command and maps exceptions to exit codes.
int run_command(const RunConfig& cfg, std::ostream& log, std::ostream& err);

}  // namespace bdc
