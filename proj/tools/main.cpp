#include "bdc/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Value flags shared by every subcommand; each maps onto a config key.
constexpr Flag kFlags[] = {
    {"--input", "input", "data CSV, or distance CSV with --distance precomputed"},
    {"--distance", "distance", "minkowski[:q] | arccos | subspace | precomputed"},
    {"--q", "q", "Minkowski exponent (>= 1)"},
    {"--k", "k", "maximum number of clusters"},
    {"--iters", "iterations", "sampler iterations"},
    {"--burn-in", "burn_in", "discarded iterations (default 20%)"},
    {"--thin", "thin", "keep every n-th draw after burn-in"},
    {"--seed", "seed", "random seed"},
    {"--chains", "chains", "independent chains"},
    {"--threads", "threads", "worker threads for chains"},
    {"--pca", "pca", "project data on the leading d principal axes"},
    {"--jitter", "jitter", "sd of Gaussian noise added to the data"},
    {"--out", "out", "output directory"},
    {"--beta-sigma", "beta_sigma", "override the elicited scale prior"},
    {"--dirichlet-conc", "dirichlet_conc", "Dirichlet concentration (default 1/k)"},
    {"--alpha-shape", "alpha_shape", "shape of the Gamma prior on alpha - 1"},
    {"--alpha-rate", "alpha_rate", "rate of the Gamma prior on alpha - 1"},
    {"--sigma-shape", "sigma_shape", "shape of the inverse-Gamma prior on sigma"},
    {"--leapfrog-steps", "leapfrog_steps", "leapfrog steps per HMC move"},
    {"--stepsize", "stepsize", "leapfrog step size"},
    {"--momentum-sd", "momentum_sd", "momentum standard deviation"},
    {"--temperature", "temperature", "softmax temperature"},
    {"--rw-sd", "rw_sd", "random-walk sd for alpha"},
    {"--vertex-mass", "vertex_mass", "mass of canonical logits on the assigned label"},
    {"--relaxed-counts", "relaxed_counts", "column_sums | gram"},
    {"--accept-energy", "accept_energy", "vertex | relaxed | potential (HMC accept energies)"},
    {"--init", "init", "spectral | random | file:<labels.csv>"},
    {"--sparsity-weight", "sparsity_weight", "l1 weight of the self-expression problem"},
    {"--factor-restarts", "factor_restarts", "restarts of the simplex factorization"},
    {"--spec", "spec", "generator spec JSON (simulate)"},
    {"--labels", "labels", "estimated labels CSV (eval)"},
    {"--truth", "truth", "reference labels CSV (eval)"},
    {"--table", "table", "table1 | table4 | subspace (replicate)"},
    {"--reps", "reps", "repetitions per setting (replicate)"},
};

struct Parsed {
  std::string config;
  std::map<std::string, std::string> values;
  bool header = false;
  bool no_validate = false;
  bool no_label_prior = false;
};

void add_options(CLI::App* sub, Parsed& p) {
  sub->add_option("--config", p.config, "config file (JSON or key = value); flags override it");
  for (const auto& f : kFlags) sub->add_option(f.name, p.values[f.key], f.help);
  sub->add_flag("--header", p.header, "input CSV has a header line");
  sub->add_flag("--no-validate", p.no_validate, "skip distance-matrix validation");
  sub->add_flag("--no-label-prior", p.no_label_prior, "drop the n_h log(pi_h) term");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian distance clustering"};
  app.set_version_flag("--version", std::string(bdc::library_version()));
  app.require_subcommand(1);

  Parsed parsed;
  std::vector<CLI::App*> subs = {
      app.add_subcommand("cluster", "cluster a data or distance CSV"),
      app.add_subcommand("simulate", "generate a synthetic mixture from a spec"),
      app.add_subcommand("eval", "compare two label files (ARI, NMI, AMI)"),
      app.add_subcommand("replicate", "run a seeded desk-scale experiment table"),
  };
  for (auto* s : subs) add_options(s, parsed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return bdc::kExitUsage;
  }

  CLI::App* chosen = nullptr;
  for (auto* s : subs)
    if (s->parsed()) chosen = s;

  try {
    bdc::RunConfig cfg = parsed.config.empty() ? bdc::RunConfig{} : bdc::RunConfig::load(parsed.config);
    cfg.command = chosen->get_name();
    for (const auto& f : kFlags)
      if (chosen->count(f.name) > 0) cfg.apply(f.key, parsed.values[f.key]);
    if (parsed.header) cfg.header = true;
    if (parsed.no_validate) cfg.validate = false;
    if (parsed.no_label_prior) cfg.sampler.include_label_prior = false;
    return bdc::run_command(cfg, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bdc::kExitUsage;
  }
}
