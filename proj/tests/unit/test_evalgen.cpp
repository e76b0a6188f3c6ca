#include "bdc/baselines.hpp"
#include "bdc/checks.hpp"
#include "bdc/generators.hpp"
#include "bdc/metrics.hpp"

#include "helpers.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace bdc;
using namespace testing;

namespace {

GeneratorSpec single(GeneratorFamily f, int n, int p, ComponentSpec c) {
  GeneratorSpec s;
  s.family = f;
  s.n = n;
  s.p = p;
  s.weights = Vector::Ones(1);
  if (c.location.size() == 0) c.location = Vector::Zero(p);
  s.components = {c};
  return s;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

/// Pair-counting ARI straight from the definition over all pairs.
double ari_oracle(const Labels& a, const Labels& b) {
  const size_t n = a.size();
  double both = 0, in_a = 0, in_b = 0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) {
      both += a[i] == a[j] && b[i] == b[j];
      in_a += a[i] == a[j];
      in_b += b[i] == b[j];
    }
  const double pairs = choose2(static_cast<double>(n));
  const double expected = in_a * in_b / pairs;
  const double max = 0.5 * (in_a + in_b);
  if (max == expected) return 1.0;
  return (both - expected) / (max - expected);
}

double entropy(const Labels& a) {
  std::map<int, double> c;
  for (int v : a) c[v] += 1;
  double h = 0.0;
  for (const auto& [_, m] : c) h -= m / a.size() * std::log(m / a.size());
  return h;
}

double mutual_information(const Labels& a, const Labels& b) {
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> cab;
  const double n = static_cast<double>(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    cab[{a[i], b[i]}] += 1;
  }
  double mi = 0.0;
  for (const auto& [key, c] : cab) mi += c / n * std::log(n * c / (ca[key.first] * cb[key.second]));
  return mi;
}

}  // namespace

TEST_SUITE("generators") {
  TEST_CASE("skew-normal moments") {
    const double a = 5.0, delta = a / std::sqrt(1.0 + a * a);
    ComponentSpec c;
    c.location = Vector::Constant(1, 1.5);
    c.scale = 2.0;
    c.skewness = a;
    Rng rng = make_rng(71);
    const GeneratedData g = gen_skew_normal_mixture(single(GeneratorFamily::SkewNormal, 200000, 1, c), rng);
    std::vector<double> x(g.x.values().data(), g.x.values().data() + g.x.n());
    const Moments m = sample_moments(x);
    CHECK(m.mean == doctest::Approx(1.5 + 2.0 * delta * std::sqrt(2.0 / M_PI)).epsilon(0.01));
    CHECK(m.var == doctest::Approx(4.0 * (1.0 - 2.0 * delta * delta / M_PI)).epsilon(0.02));
    // Skewness sign: mean above median.
    std::nth_element(x.begin(), x.begin() + x.size() / 2, x.end());
    CHECK(m.mean > x[x.size() / 2]);
  }

  TEST_CASE("von Mises angle: uniform at kappa 0") {
    const VonMisesAngleSampler s(0.0);
    CHECK(s.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-6));
    Rng rng = make_rng(72);
    std::vector<double> t(20000);
    for (auto& v : t) v = s(rng);
    std::sort(t.begin(), t.end());
    double ks = 0.0;
    for (size_t i = 0; i < t.size(); ++i) {
      const double f = (t[i] + M_PI) / (2.0 * M_PI);
      ks = std::max({ks, std::abs(f - static_cast<double>(i) / t.size()), std::abs(f - (i + 1.0) / t.size())});
    }
    // 1% critical value of the KS statistic is 1.63 / sqrt(n).
    CHECK(ks < 1.63 / std::sqrt(20000.0));
  }

  TEST_CASE("von Mises angle cdf against quadrature") {
    const double kappa = 2.5;
    const VonMisesAngleSampler s(kappa);
    const double i0 = boost::math::cyl_bessel_i(0, kappa);
    for (double theta : {-2.0, -0.5, 0.3, 1.7}) {
      double acc = 0.0;
      const int m = 200000;
      for (int i = 0; i < m; ++i) {
        const double x = -M_PI + (theta + M_PI) * (i + 0.5) / m;
        acc += std::exp(kappa * std::cos(x));
      }
      acc *= (theta + M_PI) / m / (2.0 * M_PI * i0);
      CHECK(s.cdf(theta) == doctest::Approx(acc).epsilon(1e-4));
    }
  }

  TEST_CASE("vMF mean resultant length") {
    Rng rng = make_rng(73);
    for (int p : {2, 3, 5}) {
      for (double kappa : {0.3, 5.0, 50.0}) {
        Vector mu = gaussian_matrix(p, 1, rng).col(0);
        mu.normalize();
        double proj = 0.0;
        const int m = 40000;
        for (int i = 0; i < m; ++i) {
          const Vector y = sample_vmf(mu, kappa, rng);
          REQUIRE(std::abs(y.norm() - 1.0) < 1e-12);
          proj += mu.dot(y);
        }
        proj /= m;
        // E[mu'y] = I_{p/2}(kappa) / I_{p/2 - 1}(kappa)
        const double nu = p / 2.0;
        const double expected = boost::math::cyl_bessel_i(nu, kappa) / boost::math::cyl_bessel_i(nu - 1.0, kappa);
        CHECK(proj == doctest::Approx(expected).epsilon(0.02));
      }
    }
  }

  TEST_CASE("laplace moments") {
    ComponentSpec c;
    c.location = Vector::Constant(2, -1.0);
    c.scale = 0.5;
    Rng rng = make_rng(74);
    const GeneratedData g = gen_laplace_mixture(single(GeneratorFamily::Laplace, 100000, 2, c), rng);
    for (int j = 0; j < 2; ++j) {
      const Vector col = g.x.values().col(j);
      const Moments m = sample_moments(std::vector<double>(col.data(), col.data() + col.size()));
      CHECK(m.mean == doctest::Approx(-1.0).epsilon(0.01));
      CHECK(m.var == doctest::Approx(2.0 * 0.25).epsilon(0.02));
    }
  }

  TEST_CASE("subspace mixture lies near its subspaces") {
    GeneratorSpec s;
    s.family = GeneratorFamily::Subspace;
    s.n = 300;
    s.p = 10;
    s.seed = 75;
    s.weights = (Vector(2) << 0.5, 0.5).finished();
    s.exact_counts = true;
    for (int h = 0; h < 2; ++h) {
      ComponentSpec c;
      c.location = Vector::Zero(10);
      c.subspace_dim = 3;
      c.noise_sd = 0.01;
      s.components.push_back(c);
    }
    Rng rng = make_rng(75);
    const GeneratedData g = generate(s, rng);
    REQUIRE(g.bases.size() == 2);
    CHECK(std::count(g.labels.begin(), g.labels.end(), 0) == 150);
    for (const auto& b : g.bases) CHECK((b.transpose() * b - Matrix::Identity(3, 3)).norm() < 1e-12);
    double rms = 0.0;
    for (int i = 0; i < g.x.n(); ++i) {
      const Vector y = g.x.row(i).transpose();
      const Matrix& b = g.bases[g.labels[i]];
      rms += (y - b * (b.transpose() * y)).squaredNorm();
    }
    // Residual keeps 7 of the 10 noise coordinates.
    CHECK(std::sqrt(rms / g.x.n() / 7.0) == doctest::Approx(0.01).epsilon(0.1));
  }

  TEST_CASE("generation is deterministic and specs round-trip through JSON") {
    const GeneratorSpec s = GeneratorSpec::from_json(nlohmann::json::parse(slurp(BDC_SOURCE_DIR "/data/two_blobs_spec.json")));
    CHECK(s.n == 80);
    CHECK(s.components[1].location == Vector::Constant(2, 4.0));
    Rng r1 = make_rng(s.seed), r2 = make_rng(s.seed);
    const GeneratedData a = generate(s, r1), b = generate(s, r2);
    CHECK(a.x.values() == b.x.values());
    CHECK(a.labels == b.labels);
    const GeneratorSpec back = GeneratorSpec::from_json(s.to_json());
    CHECK(back.to_json() == s.to_json());
    CHECK_THROWS(GeneratorSpec::from_json(nlohmann::json::parse(R"({"family":"nope","n":3,"components":[{}]})")));
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("ari examples") {
    CHECK(ari(Labels{0, 0, 1, 1}, Labels{0, 1, 0, 1}) == doctest::Approx(-0.5));
    CHECK(ari(Labels{0, 0, 1, 1}, Labels{7, 7, 3, 3}) == 1.0);
    CHECK(ari(Labels{0, 0, 0}, Labels{0, 0, 0}) == 1.0);
  }

  TEST_CASE("ari, nmi and ami against pair-counting and entropy oracles") {
    Rng rng = make_rng(76);
    for (int rep = 0; rep < 300; ++rep) {
      const int n = uniform_int(rng, 2, 30);
      const Labels a = random_labels(n, uniform_int(rng, 1, 4), rng), b = random_labels(n, uniform_int(rng, 1, 5), rng);
      CHECK(ari(a, b) == doctest::Approx(ari_oracle(a, b)).epsilon(1e-10));
      const double ha = entropy(a), hb = entropy(b);
      if (ha + hb > 0) CHECK(nmi(a, b) == doctest::Approx(2.0 * mutual_information(a, b) / (ha + hb)).epsilon(1e-10));
      CHECK(ami(a, b) <= 1.0 + 1e-12);
      CHECK(ami(a, b) == doctest::Approx(ami(b, a)).epsilon(1e-10));
      Labels relabelled = a;
      for (auto& v : relabelled) v = 10 - 3 * v;
      CHECK(ari(relabelled, b) == doctest::Approx(ari(a, b)).epsilon(1e-12));
      CHECK(ami(relabelled, b) == doctest::Approx(ami(a, b)).epsilon(1e-12));
    }
  }

  TEST_CASE("ami is one on identity and centred under independence") {
    Rng rng = make_rng(77);
    const Labels a = random_labels(50, 3, rng);
    CHECK(ami(a, a) == doctest::Approx(1.0));
    CHECK(nmi(a, a) == doctest::Approx(1.0));
    double mean = 0.0;
    for (int rep = 0; rep < 400; ++rep) mean += ami(random_labels(50, 3, rng), random_labels(50, 3, rng));
    CHECK(std::abs(mean / 400) < 0.01);
  }

  TEST_CASE("contingency table") {
    const Matrix t = contingency_table(Labels{5, 5, 2}, Labels{0, 1, 1});
    CHECK(t.rows() == 2);
    CHECK(t.sum() == 3.0);
    CHECK_THROWS(ari(Labels{0, 1}, Labels{0}));
  }
}

TEST_SUITE("baselines") {
  TEST_CASE("spectral clustering and GMM separate distant blobs") {
    Rng rng = make_rng(78);
    const Matrix x = two_blob_points(30, rng);
    const Labels truth = two_blob_labels(30);
    CHECK(ari(spectral_clustering(compute_minkowski_distances(DataMatrix(x), 2.0), 2, rng), truth) == 1.0);
    const GmmResult g = gmm_em_diag_fit(DataMatrix(x), 2, rng);
    CHECK(ari(g.labels, truth) == 1.0);
    CHECK(g.converged);
    for (size_t i = 1; i < g.log_likelihood.size(); ++i)
      CHECK(g.log_likelihood[i] >= g.log_likelihood[i - 1] - 1e-8 * std::abs(g.log_likelihood[i - 1]));
    CHECK(std::abs(g.weights.sum() - 1.0) < 1e-12);
    const KMeansResult km = kmeans(x, 2, rng);
    CHECK(ari(km.labels, truth) == 1.0);
  }
}

TEST_SUITE("checks") {
  TEST_CASE("gamma tail quadrature") {
    for (double a : {1.0, 1.5, 3.0, 7.0})
      for (double t : {0.1, 0.5, 2.0, 10.0, 25.0})
        CHECK(gamma_upper_tail(a, t) == doctest::Approx(boost::math::gamma_q(a, t)).epsilon(1e-9));
    CHECK(gamma_upper_tail(1.0, 3.0) == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
  }

  TEST_CASE("tail bound report") {
    const TailBoundReport r = tail_bound_check({1.0, 1.5}, {0.3, 0.5, 1.0, 5.0});
    REQUIRE(r.points.size() == 8);
    for (const auto& pt : r.points) {
      const double m = std::pow(pt.alpha, -pt.alpha) * std::exp(pt.alpha);
      CHECK(pt.bound == doctest::Approx(m * std::pow(pt.t, pt.alpha) * std::exp(-pt.t)));
      CHECK(pt.holds == (pt.exact <= pt.bound));
    }
    auto at = [&](double a, double t) {
      return *std::find_if(r.points.begin(), r.points.end(), [&](const auto& p) { return p.alpha == a && p.t == t; });
    };
    // The bound peaks at exactly 1 when t = alpha.
    CHECK(at(1.0, 1.0).vacuous);
    CHECK_FALSE(at(1.0, 5.0).vacuous);
    // Below the mode the bound fails: e^{-t} > e t e^{-t} for t < 1/e.
    CHECK_FALSE(at(1.0, 0.3).holds);
    CHECK(at(1.0, 0.5).holds);
    CHECK_FALSE(at(1.5, 0.5).holds);
    CHECK(at(1.5, 1.0).holds);
    CHECK(r.holds_from == std::vector<double>{0.5, 1.0});
    CHECK(r.violations == 3);
  }

  TEST_CASE("empirical tail report is internally consistent") {
    GeneratorSpec s;
    s.family = GeneratorFamily::Laplace;
    s.n = 200;
    s.p = 4;
    s.seed = 79;
    s.weights = Vector::Ones(1);
    ComponentSpec c;
    c.location = Vector::Zero(4);
    c.scale = 0.5;
    s.components = {c};
    const EmpiricalTailReport r = empirical_tail_check(s, TailBoundParams{});
    CHECK(r.pairs == 200 * 199 / 2);
    CHECK(r.params.nu > 0.0);
    CHECK(r.params.b > 0.0);
    int v = 0;
    for (const auto& pt : r.points) {
      CHECK(pt.t > r.t_min);
      CHECK(pt.empirical >= 0.0);
      CHECK(pt.empirical <= 1.0);
      v += !pt.holds;
    }
    CHECK(v == r.violations);
  }

  TEST_CASE("within-cluster distances concentrate") {
    const auto r = mode_concentration_check({2, 20}, 3, 300);
    REQUIRE(r.size() == 2);
    for (const auto& m : r) CHECK(m.within_median < m.across_median);
    CHECK(r[0].within_mode < r[1].within_mode);
  }
}
