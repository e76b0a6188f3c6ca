#include "bdc/cli.hpp"

#include "bdc/baselines.hpp"
#include "bdc/csv.hpp"
#include "bdc/generators.hpp"
#include "bdc/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#ifndef BDC_VERSION
#define BDC_VERSION "0.0.0"
#endif

namespace bdc {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kJitterStream = 0x4A17;
constexpr std::uint64_t kFactorStream = 0xFAC7;
constexpr std::uint64_t kDataStream = 0xDA7A;
constexpr std::uint64_t kBaselineStream = 0xBA5E;

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out))
    throw ParameterError("invalid number for '" + key + "': " + v);
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ParameterError("invalid integer for '" + key + "': " + v);
  return out;
}

int parse_int32(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw ParameterError("integer out of range for '" + key + "': " + v);
  return static_cast<int>(x);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParameterError("invalid boolean for '" + key + "': " + v);
}

std::string relaxed_name(RelaxedCounts c) { return c == RelaxedCounts::Gram ? "gram" : "column_sums"; }

std::string accept_name(AcceptEnergy a) {
  switch (a) {
    case AcceptEnergy::Vertex: return "vertex";
    case AcceptEnergy::Relaxed: return "relaxed";
    case AcceptEnergy::Potential: break;
  }
  return "potential";
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ValidationError("output directory not writable: " + dir.string());
}

Labels read_labels_zero_based(const fs::path& path) {
  const auto raw = csv::read_label_column(path);
  Labels out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<int>(raw[i]);
  return out;
}

std::vector<int> cluster_sizes(const Labels& labels) {
  std::vector<int> sizes(count_labels(labels), 0);
  for (int l : labels) ++sizes[l];
  return sizes;
}

PriorConfig prior_from(const RunConfig& cfg, double beta_sigma) {
  PriorConfig prior = PriorConfig::with_defaults(cfg.k, beta_sigma);
  if (cfg.dirichlet_conc) prior.dirichlet_conc = *cfg.dirichlet_conc;
  prior.alpha_shape = cfg.alpha_shape;
  prior.alpha_rate = cfg.alpha_rate;
  prior.sigma_shape = cfg.sigma_shape;
  prior.validate();
  return prior;
}

}  // namespace

std::string_view library_version() { return BDC_VERSION; }

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "command",     "input",          "header",          "validate",    "distance",      "q",
      "sparsity_weight", "pca",        "jitter",          "k",           "beta_sigma",    "dirichlet_conc",
      "alpha_shape", "alpha_rate",     "sigma_shape",     "iterations",  "burn_in",       "thin",
      "seed",        "leapfrog_steps", "stepsize",        "momentum_sd", "temperature",   "rw_sd",
      "include_label_prior", "vertex_mass", "relaxed_counts", "accept_energy", "chains",  "threads",       "init",
      "factor_restarts", "out",        "spec",            "labels",      "truth",         "table",
      "reps"};
  return keys;
}

void RunConfig::apply(const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in);
  const std::string v = trim(value_in);
  if (key == "command") command = v;
  else if (key == "input") input = v;
  else if (key == "header") header = parse_bool(key, v);
  else if (key == "validate") validate = parse_bool(key, v);
  else if (key == "distance") {
    const auto colon = v.find(':');
    distance = v.substr(0, colon);
    if (colon != std::string::npos) {
      if (distance != "minkowski") throw ParameterError("only minkowski takes a parameter: " + v);
      q = parse_double(key, v.substr(colon + 1));
    }
  } else if (key == "q") q = parse_double(key, v);
  else if (key == "sparsity_weight") sparsity_weight = parse_double(key, v);
  else if (key == "pca") pca = parse_int32(key, v);
  else if (key == "jitter") jitter = parse_double(key, v);
  else if (key == "k") k = parse_int32(key, v);
  else if (key == "beta_sigma") beta_sigma = parse_double(key, v);
  else if (key == "dirichlet_conc") dirichlet_conc = parse_double(key, v);
  else if (key == "alpha_shape") alpha_shape = parse_double(key, v);
  else if (key == "alpha_rate") alpha_rate = parse_double(key, v);
  else if (key == "sigma_shape") sigma_shape = parse_double(key, v);
  else if (key == "iterations" || key == "iters") sampler.iterations = parse_int32(key, v);
  else if (key == "burn_in") sampler.burn_in = parse_int32(key, v);
  else if (key == "thin") sampler.thin = parse_int32(key, v);
  else if (key == "seed") {
    const long long s = parse_int(key, v);
    if (s < 0) throw ParameterError("seed must be >= 0");
    sampler.seed = static_cast<std::uint64_t>(s);
  } else if (key == "leapfrog_steps") sampler.leapfrog_steps = parse_int32(key, v);
  else if (key == "stepsize") sampler.stepsize = parse_double(key, v);
  else if (key == "momentum_sd") sampler.momentum_sd = parse_double(key, v);
  else if (key == "temperature") sampler.temperature = parse_double(key, v);
  else if (key == "rw_sd") sampler.rw_sd = parse_double(key, v);
  else if (key == "include_label_prior") sampler.include_label_prior = parse_bool(key, v);
  else if (key == "vertex_mass") sampler.vertex_mass = parse_double(key, v);
  else if (key == "accept_energy") {
    if (v == "vertex") sampler.accept_energy = AcceptEnergy::Vertex;
    else if (v == "relaxed") sampler.accept_energy = AcceptEnergy::Relaxed;
    else if (v == "potential") sampler.accept_energy = AcceptEnergy::Potential;
    else throw ParameterError("accept_energy must be vertex, relaxed or potential: " + v);
  } else if (key == "relaxed_counts") {
    if (v == "column_sums") sampler.relaxed_counts = RelaxedCounts::ColumnSums;
    else if (v == "gram") sampler.relaxed_counts = RelaxedCounts::Gram;
    else throw ParameterError("relaxed_counts must be column_sums or gram: " + v);
  } else if (key == "chains") sampler.chains = parse_int32(key, v);
  else if (key == "threads") sampler.threads = parse_int32(key, v);
  else if (key == "init") init = v;
  else if (key == "factor_restarts") factor_restarts = parse_int32(key, v);
  else if (key == "out") out = v;
  else if (key == "spec") spec = v;
  else if (key == "labels") labels = v;
  else if (key == "truth") truth = v;
  else if (key == "table") table = v;
  else if (key == "reps") reps = parse_int32(key, v);
  else throw ParameterError("unknown config key: " + key);
}

void RunConfig::validate_config() const {
  if (command != "cluster" && command != "simulate" && command != "eval" && command != "replicate")
    throw ParameterError("unknown command: " + command);
  if (distance != "minkowski" && distance != "arccos" && distance != "subspace" && distance != "precomputed")
    throw ParameterError("distance must be minkowski[:q], arccos, subspace or precomputed: " + distance);
  if (!(q >= 1.0)) throw ParameterError("q must be >= 1");
  if (k < 1) throw ParameterError("k must be >= 1");
  if (pca < 0) throw ParameterError("pca must be >= 0");
  if (!(jitter >= 0.0)) throw ParameterError("jitter must be >= 0");
  if (!(sparsity_weight > 0.0)) throw ParameterError("sparsity_weight must be > 0");
  if (beta_sigma && !(*beta_sigma > 0.0)) throw ParameterError("beta_sigma must be > 0");
  if (dirichlet_conc && !(*dirichlet_conc > 0.0)) throw ParameterError("dirichlet_conc must be > 0");
  if (init != "spectral" && init != "random" && init.rfind("file:", 0) != 0)
    throw ParameterError("init must be spectral, random or file:<path>: " + init);
  if (factor_restarts < 1) throw ParameterError("factor_restarts must be >= 1");
  if (reps < 1) throw ParameterError("reps must be >= 1");
  sampler.validate();
}

json RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["input"] = input;
  j["header"] = header;
  j["validate"] = validate;
  j["distance"] = distance;
  j["q"] = q;
  j["sparsity_weight"] = sparsity_weight;
  j["pca"] = pca;
  j["jitter"] = jitter;
  j["k"] = k;
  j["beta_sigma"] = beta_sigma ? json(*beta_sigma) : json(nullptr);
  j["dirichlet_conc"] = dirichlet_conc ? json(*dirichlet_conc) : json(nullptr);
  j["alpha_shape"] = alpha_shape;
  j["alpha_rate"] = alpha_rate;
  j["sigma_shape"] = sigma_shape;
  j["iterations"] = sampler.iterations;
  j["burn_in"] = sampler.burn_in;
  j["thin"] = sampler.thin;
  j["seed"] = sampler.seed;
  j["leapfrog_steps"] = sampler.leapfrog_steps;
  j["stepsize"] = sampler.stepsize;
  j["momentum_sd"] = sampler.momentum_sd;
  j["temperature"] = sampler.temperature;
  j["rw_sd"] = sampler.rw_sd;
  j["include_label_prior"] = sampler.include_label_prior;
  j["vertex_mass"] = sampler.vertex_mass;
  j["relaxed_counts"] = relaxed_name(sampler.relaxed_counts);
  j["accept_energy"] = accept_name(sampler.accept_energy);
  j["chains"] = sampler.chains;
  j["threads"] = sampler.threads;
  j["init"] = init;
  j["factor_restarts"] = factor_restarts;
  j["out"] = out;
  j["spec"] = spec;
  j["labels"] = labels;
  j["truth"] = truth;
  j["table"] = table;
  j["reps"] = reps;
  return j;
}

RunConfig RunConfig::from_json(const json& j_in) {
  const json& j = j_in.contains("config") && j_in.at("config").is_object() ? j_in.at("config") : j_in;
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (value.is_null()) continue;
    if (value.is_string())
      cfg.apply(key, value.get<std::string>());
    else if (value.is_boolean())
      cfg.apply(key, value.get<bool>() ? "true" : "false");
    else if (value.is_number())
      cfg.apply(key, value.dump());
    else
      throw ParameterError("config key '" + key + "' has an unsupported value type");
  }
  return cfg;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string head = trim(text);
  if (!head.empty() && head.front() == '{') {
    try {
      return from_json(json::parse(text));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ": " + e.what());
    }
  }
  RunConfig cfg;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    cfg.apply(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

BdcFit fit_bdc(const DistanceMatrix& d, const SamplerConfig& cfg, const PriorConfig& prior,
               const std::optional<Assignment>& init, int factor_restarts) {
  BdcFit fit;
  fit.trace = run_chains(d, cfg, prior, init);
  fit.coassign = coassignment_from_trace(fit.trace);
  fit.estimate = point_estimate_vi(fit.trace);
  Rng rng = make_rng(cfg.seed, kFactorStream);
  fit.assign_probs = simplex_factorize(fit.coassign, prior.k, rng, 1e-10, 2000, factor_restarts);
  fit.warnings = fit.trace.warnings;
  fit.warnings.insert(fit.warnings.end(), fit.assign_probs.warnings.begin(), fit.assign_probs.warnings.end());
  return fit;
}

DistanceMatrix distances_for(const DataMatrix& x, const RunConfig& cfg, std::vector<std::string>& warnings) {
  if (cfg.distance == "minkowski") return compute_minkowski_distances(x, cfg.q);
  if (cfg.distance == "arccos") return compute_arccos_distances(x);
  if (cfg.distance == "subspace") {
    SubspaceEmbeddingConfig sc;
    sc.sparsity_weight = cfg.sparsity_weight;
    SelfExpressionResult se = solve_self_expression(x, sc);
    warnings.insert(warnings.end(), se.warnings.begin(), se.warnings.end());
    return compute_subspace_distances(se.w);
  }
  throw ParameterError("distance '" + cfg.distance + "' needs a precomputed matrix");
}

double resolve_beta_sigma(const RunConfig& cfg, const DataMatrix* x, const DistanceMatrix& d,
                          std::vector<std::string>& warnings) {
  if (cfg.beta_sigma) return *cfg.beta_sigma;
  if (x && (cfg.distance == "minkowski" || cfg.distance == "arccos")) {
    MveeResult e = mvee(*x);
    warnings.insert(warnings.end(), e.warnings.begin(), e.warnings.end());
    return elicit_beta_sigma(e.ellipsoid.volume, cfg.k, x->p());
  }
  const double med = d.median_offdiagonal();
  if (!(med > 0.0)) throw NumericalError("median off-diagonal distance is zero; set beta_sigma explicitly");
  return med / 4.0;
}

Interval mean_interval(const std::vector<double>& values) {
  Interval iv;
  if (values.empty()) return iv;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  iv.mean = sum / n;
  if (values.size() < 2) {
    iv.lo = iv.hi = iv.mean;
    return iv;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - iv.mean) * (v - iv.mean);
  const double half = 1.96 * std::sqrt(ss / (n - 1.0) / n);
  iv.lo = std::max(-1.0, iv.mean - half);
  iv.hi = std::min(1.0, iv.mean + half);
  return iv;
}

void ExperimentTable::write_csv(std::ostream& os) const {
  os << setting_name;
  if (!rows.empty())
    for (const auto& m : rows.front().methods) os << ',' << m << "_mean," << m << "_lo," << m << "_hi";
  os << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& r : rows) {
    os << r.setting;
    for (const auto& a : r.ari) {
      const Interval iv = mean_interval(a);
      os << ',' << iv.mean << ',' << iv.lo << ',' << iv.hi;
    }
    os << '\n';
  }
  os << std::defaultfloat;
}

ExperimentTable replicate_skew_normal(const std::vector<int>& p_list, int reps, std::uint64_t seed,
                                      const SamplerConfig& sampler) {
  ExperimentTable table{"table1", "p", {}};
  for (int p : p_list) {
    ExperimentRow row{std::to_string(p), {"bdc", "gmm"}, {{}, {}}};
    for (int r = 0; r < reps; ++r) {
      const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
      GeneratorSpec spec;
      spec.family = GeneratorFamily::SkewNormal;
      spec.n = 200;
      spec.p = p;
      spec.seed = s;
      spec.weights = Vector::Constant(2, 0.5);
      ComponentSpec c1;
      c1.location = Vector::Zero(p);
      c1.skewness = 8.0;
      ComponentSpec c2;
      c2.location = Vector::Constant(p, 2.0);
      c2.skewness = 10.0;
      spec.components = {c1, c2};
      Rng data_rng = make_rng(s, kDataStream);
      const GeneratedData data = generate(spec, data_rng);

      RunConfig rc;
      rc.k = 2;
      rc.distance = "minkowski";
      std::vector<std::string> warnings;
      const DistanceMatrix d = compute_minkowski_distances(data.x, 2.0);
      SamplerConfig sc = sampler;
      sc.seed = s;
      const BdcFit fit = fit_bdc(d, sc, prior_from(rc, resolve_beta_sigma(rc, &data.x, d, warnings)));
      row.ari[0].push_back(ari(fit.estimate.labels, data.labels));

      Rng gmm_rng = make_rng(s, kBaselineStream);
      row.ari[1].push_back(ari(gmm_em_diag(data.x, 2, gmm_rng), data.labels));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<VmfSetting> published_vmf_settings() {
  return {{"2", (Vector(2) << -1.0, 0.0).finished()},
          {"1.70", (Vector(2) << -std::sqrt(0.2), 2.0 / std::sqrt(5.0)).finished()},
          {"0.76", (Vector(2) << std::sqrt(0.5), std::sqrt(0.5)).finished()},
          {"0.61", (Vector(2) << std::sqrt(2.0 / 3.0), std::sqrt(1.0 / 3.0)).finished()}};
}

ExperimentTable replicate_vmf(const std::vector<VmfSetting>& settings, int reps, std::uint64_t seed,
                              const SamplerConfig& sampler) {
  ExperimentTable table{"table4", "arc_length", {}};
  for (const auto& setting : settings) {
    ExperimentRow row{setting.label, {"bdc", "gmm"}, {{}, {}}};
    for (int r = 0; r < reps; ++r) {
      const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
      GeneratorSpec spec;
      spec.family = GeneratorFamily::VonMisesFisher;
      spec.n = 400;
      spec.p = 2;
      spec.seed = s;
      spec.weights = Vector::Constant(2, 0.5);
      ComponentSpec c1;
      c1.location = (Vector(2) << 1.0, 0.0).finished();
      c1.concentration = 0.25;
      ComponentSpec c2;
      c2.location = setting.mu2.normalized();
      c2.concentration = 0.3;
      spec.components = {c1, c2};
      Rng data_rng = make_rng(s, kDataStream);
      const GeneratedData data = generate(spec, data_rng);

      RunConfig rc;
      rc.k = 2;
      rc.distance = "arccos";
      std::vector<std::string> warnings;
      const DistanceMatrix d = compute_arccos_distances(data.x);
      SamplerConfig sc = sampler;
      sc.seed = s;
      const BdcFit fit = fit_bdc(d, sc, prior_from(rc, resolve_beta_sigma(rc, &data.x, d, warnings)));
      row.ari[0].push_back(ari(fit.estimate.labels, data.labels));

      Rng gmm_rng = make_rng(s, kBaselineStream);
      row.ari[1].push_back(ari(gmm_em_diag(data.x, 2, gmm_rng), data.labels));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

ExperimentTable replicate_subspace(int reps, std::uint64_t seed, const SamplerConfig& sampler,
                                   double sparsity_weight) {
  ExperimentTable table{"subspace", "seed", {}};
  ExperimentRow row{"all", {"bdc", "spectral"}, {{}, {}}};
  for (int r = 0; r < reps; ++r) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(r);
    GeneratorSpec spec;
    spec.family = GeneratorFamily::Subspace;
    spec.n = 200;
    spec.p = 20;
    spec.seed = s;
    spec.weights = Vector::Constant(2, 0.5);
    spec.exact_counts = true;
    ComponentSpec c;
    c.location = Vector::Zero(20);
    c.subspace_dim = 3;
    c.noise_sd = 0.05;
    spec.components = {c, c};
    Rng data_rng = make_rng(s, kDataStream);
    const GeneratedData data = generate(spec, data_rng);

    RunConfig rc;
    rc.k = 2;
    rc.distance = "subspace";
    rc.sparsity_weight = sparsity_weight;
    std::vector<std::string> warnings;
    const DistanceMatrix d = distances_for(data.x, rc, warnings);
    SamplerConfig sc = sampler;
    sc.seed = s;
    const BdcFit fit = fit_bdc(d, sc, prior_from(rc, resolve_beta_sigma(rc, &data.x, d, warnings)));
    row.ari[0].push_back(ari(fit.estimate.labels, data.labels));

    Rng sc_rng = make_rng(s, kBaselineStream);
    row.ari[1].push_back(ari(spectral_clustering(compute_minkowski_distances(data.x, 2.0), 2, sc_rng), data.labels));
  }
  table.rows.push_back(std::move(row));
  return table;
}

int cmd_cluster(const RunConfig& cfg_in, std::ostream& log) {
  RunConfig cfg = cfg_in;
  cfg.validate_config();
  if (cfg.input.empty()) throw ValidationError("cluster: --input is required");
  std::vector<std::string> warnings;

  std::optional<DataMatrix> x;
  std::optional<DistanceMatrix> d;
  if (cfg.distance == "precomputed") {
    if (cfg.pca > 0 || cfg.jitter > 0.0) throw ParameterError("pca and jitter need raw data, not distances");
    d = load_distance_matrix(cfg.input, {cfg.header, cfg.validate});
  } else {
    x = load_data_matrix(cfg.input, cfg.header);
    if (cfg.pca > 0) x = pca_project(*x, cfg.pca);
    if (cfg.jitter > 0.0) {
      Rng jr = make_rng(cfg.sampler.seed, kJitterStream);
      x = add_jitter(*x, cfg.jitter, jr);
    }
    d = distances_for(*x, cfg, warnings);
  }

  const bool fallback = !cfg.beta_sigma && !(x && (cfg.distance == "minkowski" || cfg.distance == "arccos"));
  const double beta = resolve_beta_sigma(cfg, x ? &*x : nullptr, *d, warnings);
  if (fallback) log << "beta_sigma = median off-diagonal distance / 4 = " << beta << '\n';
  cfg.beta_sigma = beta;
  const PriorConfig prior = prior_from(cfg, beta);
  cfg.dirichlet_conc = prior.dirichlet_conc;
  cfg.sampler.burn_in = cfg.sampler.resolved_burn_in();

  std::optional<Assignment> init;
  SamplerConfig sc = cfg.sampler;
  if (cfg.init == "random") {
    sc.init = InitMethod::Random;
  } else if (cfg.init.rfind("file:", 0) == 0) {
    const fs::path path = cfg.init.substr(5);
    Labels raw = read_labels_zero_based(path);
    if (static_cast<int>(raw.size()) != d->n())
      throw ValidationError(path.string() + ": expected " + std::to_string(d->n()) + " labels, found " +
                            std::to_string(raw.size()));
    for (auto& l : raw) {
      if (l < 1 || l > cfg.k)
        throw ValidationError(path.string() + ": label " + std::to_string(l) + " outside 1.." + std::to_string(cfg.k));
      l -= 1;
    }
    init = Assignment(std::move(raw), cfg.k);
    sc.init = InitMethod::Given;
  }

  const fs::path out = cfg.out;
  ensure_dir(out);
  log << "bdc " << library_version() << ": n=" << d->n() << " k=" << cfg.k << " beta_sigma=" << beta
      << " iterations=" << sc.iterations << " chains=" << sc.chains << '\n';

  const BdcFit fit = fit_bdc(*d, sc, prior, init, cfg.factor_restarts);
  warnings.insert(warnings.end(), fit.warnings.begin(), fit.warnings.end());

  Labels labels = fit.estimate.labels;
  csv::write_labels(out / "labels.csv", labels);
  csv::write_matrix(out / "coassign.csv", fit.coassign.values);
  csv::write_matrix(out / "assign_probs.csv", fit.assign_probs.values);

  json summary;
  summary["version"] = std::string(library_version());
  summary["config"] = cfg.to_json();
  summary["n"] = d->n();
  summary["k"] = cfg.k;
  summary["beta_sigma"] = beta;
  summary["retained_draws"] = fit.trace.size();
  summary["expected_vi"] = fit.estimate.expected_vi;
  summary["distinct_partitions"] = fit.estimate.distinct_partitions;
  summary["cluster_sizes"] = cluster_sizes(labels);
  summary["acceptance"] = {{"hmc", fit.trace.hmc.rate()},
                           {"alpha", fit.trace.alpha_moves.rate()},
                           {"nonfinite_energy", fit.trace.nonfinite_energy}};
  summary["factorization_objective"] = fit.assign_probs.objective;
  summary["uncertainty"] = std::vector<double>(fit.estimate.uncertainty.data(),
                                               fit.estimate.uncertainty.data() + fit.estimate.uncertainty.size());
  summary["warnings"] = warnings;
  write_json(out / "summary.json", summary);
  for (const auto& w : warnings) log << "warning: " << w << '\n';
  log << "wrote " << (out / "labels.csv").string() << ", coassign.csv, assign_probs.csv, summary.json\n";
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  if (cfg.spec.empty()) throw ValidationError("simulate: --spec <generator.json> is required");
  std::ifstream in(cfg.spec);
  if (!in) throw ValidationError("cannot open generator spec " + cfg.spec);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError(cfg.spec + ": " + e.what());
  }
  const GeneratorSpec spec = GeneratorSpec::from_json(j);
  Rng rng = make_rng(spec.seed, kDataStream);
  const GeneratedData data = generate(spec, rng);
  const fs::path out = cfg.out;
  ensure_dir(out);
  csv::write_matrix(out / "data.csv", data.x.values());
  csv::write_labels(out / "truth.csv", data.labels);
  json summary;
  summary["version"] = std::string(library_version());
  summary["spec"] = spec.to_json();
  summary["cluster_sizes"] = cluster_sizes(canonical_labels(data.labels));
  write_json(out / "summary.json", summary);
  log << "wrote " << (out / "data.csv").string() << " and truth.csv (n=" << spec.n << ", p=" << spec.p << ")\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& log) {
  if (cfg.labels.empty() || cfg.truth.empty()) throw ValidationError("eval: --labels and --truth are required");
  const Labels a = read_labels_zero_based(cfg.labels);
  const Labels b = read_labels_zero_based(cfg.truth);
  const MetricsReport m = compare_partitions(a, b);
  json report = {{"ari", m.ari}, {"nmi", m.nmi}, {"ami", m.ami}, {"n", a.size()}};
  const fs::path out = cfg.out;
  ensure_dir(out);
  write_json(out / "metrics.json", report);
  log << report.dump() << '\n';
  return kExitOk;
}

int cmd_replicate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate_config();
  ExperimentTable table;
  if (cfg.table == "table1")
    table = replicate_skew_normal({1, 5, 10, 30}, cfg.reps, cfg.sampler.seed, cfg.sampler);
  else if (cfg.table == "table4")
    table = replicate_vmf(published_vmf_settings(), cfg.reps, cfg.sampler.seed, cfg.sampler);
  else if (cfg.table == "subspace")
    table = replicate_subspace(cfg.reps, cfg.sampler.seed, cfg.sampler, cfg.sparsity_weight);
  else
    throw ParameterError("unknown table id '" + cfg.table + "' (expected table1, table4 or subspace)");

  const fs::path out = cfg.out;
  ensure_dir(out);
  {
    std::ofstream os(out / (table.id + ".csv"));
    if (!os) throw ValidationError("cannot write " + (out / (table.id + ".csv")).string());
    table.write_csv(os);
  }
  json raw;
  raw["version"] = std::string(library_version());
  raw["config"] = cfg.to_json();
  for (const auto& r : table.rows)
    for (size_t m = 0; m < r.methods.size(); ++m) raw["ari"][r.setting][r.methods[m]] = r.ari[m];
  write_json(out / (table.id + ".json"), raw);
  table.write_csv(log);
  return kExitOk;
}

int run_command(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    if (cfg.command == "cluster") return cmd_cluster(cfg, log);
    if (cfg.command == "simulate") return cmd_simulate(cfg, log);
    if (cfg.command == "eval") return cmd_eval(cfg, log);
    if (cfg.command == "replicate") return cmd_replicate(cfg, log);
    err << "error: unknown command '" << cfg.command << "'\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace bdc
