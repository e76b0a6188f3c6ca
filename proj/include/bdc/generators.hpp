#pragma once

#include "bdc/common.hpp"
#include "bdc/distmat.hpp"

#include <json.hpp>

#include <string_view>

namespace bdc {

enum class GeneratorFamily { SkewNormal, VonMisesFisher, Laplace, Subspace };

GeneratorFamily parse_generator_family(std::string_view name);
std::string_view generator_family_name(GeneratorFamily f);

struct ComponentSpec {
  /// Location (skew-normal, Laplace) or mean direction (vMF); length p.
  Vector location;
  double scale = 1.0;
  /// Skew-normal shape.
  double skewness = 0.0;
  /// vMF concentration.
  double concentration = 0.0;
  /// Subspace mixtures: dimension of the component's subspace.
  int subspace_dim = 0;
  /// Subspace mixtures: isotropic noise sd added to each coordinate.
  double noise_sd = 0.0;
};

struct GeneratorSpec {
  GeneratorFamily family = GeneratorFamily::SkewNormal;
  int n = 0;
  int p = 1;
  std::uint64_t seed = 1;
  Vector weights;
  /// Assign round(n w_h) points to component h in index order instead of
  /// drawing labels.
  bool exact_counts = false;
  std::vector<ComponentSpec> components;

  void validate() const;
  [[nodiscard]] nlohmann::json to_json() const;
  /// Scalars given for `location` are broadcast to length p.
  static GeneratorSpec from_json(const nlohmann::json& j);
};

struct GeneratedData {
  DataMatrix x;
  Labels labels;
  /// Subspace mixtures only: p x d orthonormal basis per component.
  std::vector<Matrix> bases;
};

/// Draws labels from the weights, then coordinates from the matching family.
GeneratedData generate(const GeneratorSpec& spec, Rng& rng);

/// Coordinates i.i.d. skew-normal SN(mu_hj, scale, skewness) via
/// mu + scale (delta |z0| + sqrt(1 - delta^2) z1), delta = a / sqrt(1 + a^2).
GeneratedData gen_skew_normal_mixture(const GeneratorSpec& spec, Rng& rng);

/// Unit vectors with density proportional to exp(kappa mu'y). p = 2 uses
/// the inverse CDF of the angle; p > 2 uses Wood's rejection sampler.
GeneratedData gen_vmf_mixture(const GeneratorSpec& spec, Rng& rng);

/// Coordinates mu_hj + scale * Laplace(0, 1).
GeneratedData gen_laplace_mixture(const GeneratorSpec& spec, Rng& rng);

/// Points basis_h * z + noise, z ~ N(0, I_d), with a random orthonormal
/// p x d basis per component.
GeneratedData gen_subspace_mixture(const GeneratorSpec& spec, Rng& rng);

/// One draw of the angle (radians, in (-pi, pi]) from the von Mises density
/// proportional to exp(kappa cos theta), by tabulated inverse CDF.
class VonMisesAngleSampler {
 public:
  explicit VonMisesAngleSampler(double kappa, int grid = 20000);
  double operator()(Rng& rng) const;
  [[nodiscard]] double cdf(double theta) const;

 private:
  std::vector<double> theta_;
  std::vector<double> cdf_;
};

/// Single vMF draw on S^{p-1}.
Vector sample_vmf(const Vector& mu, double kappa, Rng& rng);

}  // namespace bdc
