#include "bdc/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bdc {
namespace {

constexpr double kPi = std::numbers::pi;

Labels draw_labels(const GeneratorSpec& spec, Rng& rng) {
  if (spec.exact_counts) {
    Labels labels;
    const int k = static_cast<int>(spec.weights.size());
    for (int h = 0; h < k; ++h) {
      const int target = h + 1 == k ? spec.n : static_cast<int>(std::lround(spec.n * spec.weights.head(h + 1).sum()));
      while (static_cast<int>(labels.size()) < target) labels.push_back(h);
    }
    return labels;
  }
  std::discrete_distribution<int> pick(spec.weights.data(), spec.weights.data() + spec.weights.size());
  Labels labels(spec.n);
  for (auto& l : labels) l = pick(rng);
  return labels;
}

double laplace_draw(Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  return e(rng) - e(rng);
}

}  // namespace

GeneratorFamily parse_generator_family(std::string_view name) {
  if (name == "skew_normal_mixture") return GeneratorFamily::SkewNormal;
  if (name == "vmf_mixture") return GeneratorFamily::VonMisesFisher;
  if (name == "laplace_mixture") return GeneratorFamily::Laplace;
  if (name == "subspace_mixture") return GeneratorFamily::Subspace;
  throw ParameterError("unknown generator family: " + std::string(name));
}

std::string_view generator_family_name(GeneratorFamily f) {
  switch (f) {
    case GeneratorFamily::SkewNormal: return "skew_normal_mixture";
    case GeneratorFamily::VonMisesFisher: return "vmf_mixture";
    case GeneratorFamily::Laplace: return "laplace_mixture";
    case GeneratorFamily::Subspace: return "subspace_mixture";
  }
  return "unknown";
}

void GeneratorSpec::validate() const {
  if (n < 2) throw ValidationError("generator: n must be >= 2");
  if (p < 1) throw ValidationError("generator: p must be >= 1");
  if (components.empty()) throw ValidationError("generator: no components");
  if (weights.size() != static_cast<Eigen::Index>(components.size()))
    throw ValidationError("generator: weights and components differ in length");
  for (Eigen::Index h = 0; h < weights.size(); ++h)
    if (!(weights(h) >= 0.0)) throw ValidationError("generator: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw ValidationError("generator: weights must sum to 1");
  for (size_t h = 0; h < components.size(); ++h) {
    const auto& c = components[h];
    const std::string tag = "generator: component " + std::to_string(h);
    if (family != GeneratorFamily::Subspace && c.location.size() != p)
      throw ValidationError(tag + " location has length " + std::to_string(c.location.size()) + ", expected p");
    if (!(c.scale > 0.0)) throw ValidationError(tag + " scale must be > 0");
    if (family == GeneratorFamily::VonMisesFisher) {
      if (p < 2) throw ValidationError("generator: vMF requires p >= 2");
      if (std::abs(c.location.norm() - 1.0) > 1e-9) throw ValidationError(tag + " mean direction must be unit norm");
      if (!(c.concentration >= 0.0)) throw ValidationError(tag + " concentration must be >= 0");
    }
    if (family == GeneratorFamily::Subspace) {
      if (c.subspace_dim < 1 || c.subspace_dim > p) throw ValidationError(tag + " subspace_dim must be in [1, p]");
      if (!(c.noise_sd >= 0.0)) throw ValidationError(tag + " noise_sd must be >= 0");
    }
  }
}

nlohmann::json GeneratorSpec::to_json() const {
  nlohmann::json j;
  j["family"] = std::string(generator_family_name(family));
  j["n"] = n;
  j["p"] = p;
  j["seed"] = seed;
  j["weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
  j["exact_counts"] = exact_counts;
  j["components"] = nlohmann::json::array();
  for (const auto& c : components) {
    nlohmann::json cj;
    cj["location"] = std::vector<double>(c.location.data(), c.location.data() + c.location.size());
    cj["scale"] = c.scale;
    cj["skewness"] = c.skewness;
    cj["concentration"] = c.concentration;
    cj["subspace_dim"] = c.subspace_dim;
    cj["noise_sd"] = c.noise_sd;
    j["components"].push_back(cj);
  }
  return j;
}

GeneratorSpec GeneratorSpec::from_json(const nlohmann::json& j) {
  GeneratorSpec s;
  try {
    s.family = parse_generator_family(j.at("family").get<std::string>());
    s.n = j.at("n").get<int>();
    s.p = j.value("p", 1);
    s.seed = j.value("seed", std::uint64_t{1});
    s.exact_counts = j.value("exact_counts", false);
    const auto& comps = j.at("components");
    for (const auto& cj : comps) {
      ComponentSpec c;
      if (cj.contains("location")) {
        const auto& loc = cj.at("location");
        if (loc.is_number()) {
          c.location = Vector::Constant(s.p, loc.get<double>());
        } else {
          const auto v = loc.get<std::vector<double>>();
          c.location = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
        }
      } else {
        c.location = Vector::Zero(s.p);
      }
      c.scale = cj.value("scale", 1.0);
      c.skewness = cj.value("skewness", 0.0);
      c.concentration = cj.value("concentration", 0.0);
      c.subspace_dim = cj.value("subspace_dim", 0);
      c.noise_sd = cj.value("noise_sd", 0.0);
      s.components.push_back(std::move(c));
    }
    if (j.contains("weights")) {
      const auto w = j.at("weights").get<std::vector<double>>();
      s.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    } else {
      s.weights = Vector::Constant(static_cast<Eigen::Index>(s.components.size()), 1.0 / s.components.size());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("generator spec: ") + e.what());
  }
  s.validate();
  return s;
}

GeneratedData generate(const GeneratorSpec& spec, Rng& rng) {
  switch (spec.family) {
    case GeneratorFamily::SkewNormal: return gen_skew_normal_mixture(spec, rng);
    case GeneratorFamily::VonMisesFisher: return gen_vmf_mixture(spec, rng);
    case GeneratorFamily::Laplace: return gen_laplace_mixture(spec, rng);
    case GeneratorFamily::Subspace: return gen_subspace_mixture(spec, rng);
  }
  throw ParameterError("unknown generator family");
}

GeneratedData gen_skew_normal_mixture(const GeneratorSpec& spec, Rng& rng) {
  spec.validate();
  Labels labels = draw_labels(spec, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(spec.n, spec.p);
  for (int i = 0; i < spec.n; ++i) {
    const auto& c = spec.components[labels[i]];
    const double delta = c.skewness / std::sqrt(1.0 + c.skewness * c.skewness);
    const double tail = std::sqrt(1.0 - delta * delta);
    for (int j = 0; j < spec.p; ++j) {
      const double z0 = std::abs(normal(rng));
      const double z1 = normal(rng);
      x(i, j) = c.location(j) + c.scale * (delta * z0 + tail * z1);
    }
  }
  return {DataMatrix(std::move(x)), std::move(labels), {}};
}

VonMisesAngleSampler::VonMisesAngleSampler(double kappa, int grid) : theta_(grid + 1), cdf_(grid + 1) {
  if (!(kappa >= 0.0)) throw ParameterError("von Mises: kappa must be >= 0");
  if (grid < 2) throw ParameterError("von Mises: grid too small");
  const double h = 2.0 * kPi / grid;
  // Density relative to its maximum, exp(kappa (cos t - 1)), integrated by Simpson on each cell.
  auto f = [kappa](double t) { return std::exp(kappa * (std::cos(t) - 1.0)); };
  theta_[0] = -kPi;
  cdf_[0] = 0.0;
  for (int g = 1; g <= grid; ++g) {
    const double a = -kPi + (g - 1) * h;
    const double b = a + h;
    theta_[g] = b;
    cdf_[g] = cdf_[g - 1] + h / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
  }
  const double total = cdf_.back();
  for (auto& v : cdf_) v /= total;
  theta_.back() = kPi;
  cdf_.back() = 1.0;
}

double VonMisesAngleSampler::cdf(double theta) const {
  if (theta <= -kPi) return 0.0;
  if (theta >= kPi) return 1.0;
  const auto it = std::upper_bound(theta_.begin(), theta_.end(), theta);
  const size_t hi = static_cast<size_t>(it - theta_.begin());
  const size_t lo = hi - 1;
  const double frac = (theta - theta_[lo]) / (theta_[hi] - theta_[lo]);
  return cdf_[lo] + frac * (cdf_[hi] - cdf_[lo]);
}

double VonMisesAngleSampler::operator()(Rng& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  size_t hi = static_cast<size_t>(it - cdf_.begin());
  if (hi == 0) hi = 1;
  const size_t lo = hi - 1;
  const double span = cdf_[hi] - cdf_[lo];
  const double frac = span > 0.0 ? (u - cdf_[lo]) / span : 0.0;
  return theta_[lo] + frac * (theta_[hi] - theta_[lo]);
}

Vector sample_vmf(const Vector& mu, double kappa, Rng& rng) {
  const Eigen::Index p = mu.size();
  if (p < 2) throw ParameterError("vMF: p must be >= 2");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double m = static_cast<double>(p - 1);
  const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + m * m)) / m;
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + m * std::log(1.0 - x0 * x0);
  std::gamma_distribution<double> g(0.5 * m, 1.0);
  double w = 0.0;
  for (;;) {
    const double g1 = g(rng);
    const double g2 = g(rng);
    const double z = g1 / (g1 + g2);
    w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = unif(rng);
    if (kappa * w + m * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
  }
  Vector v(p);
  double norm = 0.0;
  do {
    for (Eigen::Index j = 0; j < p; ++j) v(j) = normal(rng);
    v -= v.dot(mu) * mu;
    norm = v.norm();
  } while (norm < 1e-12);
  v /= norm;
  Vector y = w * mu + std::sqrt(std::max(0.0, 1.0 - w * w)) * v;
  return y / y.norm();
}

GeneratedData gen_vmf_mixture(const GeneratorSpec& spec, Rng& rng) {
  spec.validate();
  Labels labels = draw_labels(spec, rng);
  Matrix x(spec.n, spec.p);
  if (spec.p == 2) {
    std::vector<VonMisesAngleSampler> samplers;
    for (const auto& c : spec.components) samplers.emplace_back(c.concentration);
    for (int i = 0; i < spec.n; ++i) {
      const auto& c = spec.components[labels[i]];
      const double angle = std::atan2(c.location(1), c.location(0)) + samplers[labels[i]](rng);
      x(i, 0) = std::cos(angle);
      x(i, 1) = std::sin(angle);
    }
  } else {
    for (int i = 0; i < spec.n; ++i) {
      const auto& c = spec.components[labels[i]];
      x.row(i) = sample_vmf(c.location, c.concentration, rng).transpose();
    }
  }
  return {DataMatrix(std::move(x)), std::move(labels), {}};
}

GeneratedData gen_laplace_mixture(const GeneratorSpec& spec, Rng& rng) {
  spec.validate();
  Labels labels = draw_labels(spec, rng);
  Matrix x(spec.n, spec.p);
  for (int i = 0; i < spec.n; ++i) {
    const auto& c = spec.components[labels[i]];
    for (int j = 0; j < spec.p; ++j) x(i, j) = c.location(j) + c.scale * laplace_draw(rng);
  }
  return {DataMatrix(std::move(x)), std::move(labels), {}};
}

GeneratedData gen_subspace_mixture(const GeneratorSpec& spec, Rng& rng) {
  spec.validate();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> bases;
  for (const auto& c : spec.components) {
    Matrix g(spec.p, c.subspace_dim);
    for (Eigen::Index a = 0; a < g.rows(); ++a)
      for (Eigen::Index b = 0; b < g.cols(); ++b) g(a, b) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    bases.push_back(qr.householderQ() * Matrix::Identity(spec.p, c.subspace_dim));
  }
  Labels labels = draw_labels(spec, rng);
  Matrix x(spec.n, spec.p);
  for (int i = 0; i < spec.n; ++i) {
    const auto& c = spec.components[labels[i]];
    Vector z(c.subspace_dim);
    for (auto& v : z) v = normal(rng);
    Vector y = c.location.size() == spec.p ? Vector(c.location) : Vector::Zero(spec.p);
    y += c.scale * bases[labels[i]] * z;
    for (int j = 0; j < spec.p; ++j) y(j) += c.noise_sd * normal(rng);
    x.row(i) = y.transpose();
  }
  return {DataMatrix(std::move(x)), std::move(labels), std::move(bases)};
}

}  // namespace bdc
