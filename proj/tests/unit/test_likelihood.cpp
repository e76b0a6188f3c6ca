#include "bdc/assignment.hpp"
#include "bdc/likelihood.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace bdc;
using namespace testing;

namespace {

double sum_cluster_terms(const DistanceMatrix& d, const Assignment& c, const ClusterParams& p) {
  double s = 0.0;
  for (int h = 0; h < c.k(); ++h) {
    const auto m = c.members(h);
    if (!m.empty()) s += cluster_log_likelihood(d, m, p.alpha(h), p.sigma(h));
  }
  return s;
}

ClusterParams random_params(int k, Rng& rng) {
  Vector a(k), s(k);
  for (int h = 0; h < k; ++h) {
    a(h) = uniform(rng, 1.0, 4.0);
    s(h) = uniform(rng, 0.3, 3.0);
  }
  return {a, s};
}

}  // namespace

TEST_SUITE("likelihood") {
  TEST_CASE("assignment bookkeeping") {
    const Assignment c({0, 2, 2, 0, 2}, 4);
    CHECK(c.counts() == std::vector<int>{2, 0, 3, 0});
    CHECK(c.members(2) == std::vector<int>{1, 2, 4});
    const Matrix m = c.matrix();
    CHECK(m.rowwise().sum() == Vector::Ones(5));
    const Matrix ctc = m.transpose() * m;
    CHECK(ctc == Vector::Map(std::vector<double>{2, 0, 3, 0}.data(), 4).asDiagonal().toDenseMatrix());
    CHECK(c.occupied() == 2);
    CHECK(c.occupied(2) == 1);
    CHECK(canonical_labels(std::vector<int>{5, 5, 1, 7, 1}) == Labels{0, 0, 1, 2, 1});
    CHECK(count_labels(std::vector<int>{5, 5, 1, 7, 1}) == 3);
    CHECK_THROWS(Assignment({0, 3}, 2));
  }

  TEST_CASE("gamma log density examples") {
    CHECK(gamma_log_density(0.0, 1.0, 1.0) == 0.0);
    CHECK(gamma_log_density(1.0, 2.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(gamma_log_density(0.0, 2.0, 1.0) == -INFINITY);
    CHECK_THROWS_AS(gamma_log_density(-1.0, 2.0, 1.0), DomainError);
    // Mode at (alpha - 1) sigma.
    double best = 0.0, best_v = -INFINITY;
    for (int i = 1; i <= 80000; ++i) {
      const double d = i * 1e-4;
      const double v = gamma_log_density(d, 3.0, 2.0);
      if (v > best_v) {
        best_v = v;
        best = d;
      }
    }
    CHECK(best == doctest::Approx(4.0).epsilon(1e-4));
  }

  TEST_CASE("gamma log density integrates to one") {
    for (double alpha : {1.0, 2.5, 6.0}) {
      const double sigma = 0.7;
      double s = 0.0;
      const int m = 200000;
      const double hi = 80.0;
      for (int i = 1; i < m; ++i) s += std::exp(gamma_log_density(hi * i / m, alpha, sigma));
      s += 0.5 * std::exp(gamma_log_density(hi, alpha, sigma));
      if (alpha == 1.0) s += 0.5 * std::exp(gamma_log_density(0.0, alpha, sigma));
      CHECK(s * hi / m == doctest::Approx(1.0).epsilon(1e-6));
    }
  }

  TEST_CASE("cluster log likelihood examples") {
    Matrix m(3, 3);
    m << 0, 1, 2, 1, 0, 1.5, 2, 1.5, 0;
    const DistanceMatrix d(m);
    CHECK(cluster_log_likelihood(d, std::vector<int>{1}, 2.0, 1.0) == 0.0);
    CHECK(cluster_log_likelihood(d, std::vector<int>{0, 1}, 1.0, 1.0) == doctest::Approx(-1.0));
    const double a = cluster_log_likelihood(d, std::vector<int>{0, 1, 2}, 2.0, 0.8);
    const double b = cluster_log_likelihood(d, std::vector<int>{2, 0, 1}, 2.0, 0.8);
    CHECK(a == b);
    // Ordered pairs with the 1/n_h power, by hand.
    double hand = 0.0;
    for (auto [i, j] : {std::pair{0, 1}, {0, 2}, {1, 2}}) hand += 2.0 * gamma_log_density(m(i, j), 2.0, 0.8);
    CHECK(a == doctest::Approx(hand / 3.0).epsilon(1e-14));
    CHECK_THROWS(cluster_log_likelihood(d, std::vector<int>{0, 5}, 2.0, 1.0));
  }

  TEST_CASE("total log likelihood examples") {
    const DistanceMatrix d((Matrix(2, 2) << 0, 1, 1, 0).finished());
    const Assignment one({0, 0}, 1);
    const ClusterParams p = ClusterParams::uniform(1, 1.0, 1.0);
    CHECK(total_log_likelihood(d, one, p, MixtureWeights::uniform(1, 1.0), true) == doctest::Approx(-1.0));

    MixtureWeights w = MixtureWeights::uniform(2, 0.5);
    w.pi << 1.0, 0.0;
    const ClusterParams p2 = ClusterParams::uniform(2, 1.0, 1.0);
    CHECK(total_log_likelihood(d, Assignment({0, 1}, 2), p2, w, true) == -INFINITY);
    CHECK(std::isfinite(total_log_likelihood(d, Assignment({0, 1}, 2), p2, w, false)));
  }

  TEST_CASE("label prior term is n_h log pi_h") {
    Rng rng = make_rng(21);
    const DistanceMatrix d = random_distances(7, rng);
    const Assignment c({0, 1, 1, 2, 0, 1, 1}, 3);
    const ClusterParams p = random_params(3, rng);
    MixtureWeights w = MixtureWeights::uniform(3, 1.0);
    w.pi << 0.2, 0.5, 0.3;
    const double with = total_log_likelihood(d, c, p, w, true);
    const double without = total_log_likelihood(d, c, p, w, false);
    CHECK(with - without == doctest::Approx(2 * std::log(0.2) + 4 * std::log(0.5) + std::log(0.3)));
    CHECK(without == doctest::Approx(sum_cluster_terms(d, c, p)).epsilon(1e-14));
  }

  TEST_CASE("matrix form equals element-wise form, empty clusters included") {
    Rng rng = make_rng(22);
    for (int rep = 0; rep < 200; ++rep) {
      const int n = uniform_int(rng, 2, 12);
      const int k = uniform_int(rng, 1, 5);
      const Assignment c(random_labels(n, k, rng), k);
      const DistanceMatrix d = random_distances(n, rng, 0.05, 4.0);
      const ClusterParams p = random_params(k, rng);
      CHECK(std::abs(matrix_form_log_likelihood(d, c.matrix(), p) - sum_cluster_terms(d, c, p)) < 1e-10);
    }
  }

  TEST_CASE("matrix form reductions") {
    Rng rng = make_rng(23);
    const DistanceMatrix d = random_distances(6, rng);
    const ClusterParams p1 = ClusterParams::uniform(1, 2.0, 1.3);
    const std::vector<int> all{0, 1, 2, 3, 4, 5};
    CHECK(matrix_form_log_likelihood(d, Matrix::Ones(6, 1), p1) ==
          doctest::Approx(cluster_log_likelihood(d, all, 2.0, 1.3)).epsilon(1e-13));
    // An extra empty column adds nothing.
    Matrix c3 = Matrix::Zero(6, 3);
    c3.col(0).setOnes();
    const ClusterParams p3(Vector::Constant(3, 2.0), Vector::Constant(3, 1.3));
    CHECK(matrix_form_log_likelihood(d, c3, p3) ==
          doctest::Approx(matrix_form_log_likelihood(d, Matrix::Ones(6, 1), p1)).epsilon(1e-13));
    const MatrixFormTerms t = matrix_form_terms(d, c3, p3);
    CHECK(t.normalizer == doctest::Approx(-5.0 * (std::lgamma(2.0) + 2.0 * std::log(1.3))));
  }

  TEST_CASE("relabelling observations leaves the target unchanged") {
    Rng rng = make_rng(24);
    const int n = 11, k = 3;
    const DistanceMatrix d = random_distances(n, rng);
    const Labels labels = random_labels(n, k, rng);
    const ClusterParams p = random_params(k, rng);
    MixtureWeights w = MixtureWeights::uniform(k, 1.0);
    w.pi << 0.3, 0.3, 0.4;
    const double base = total_log_likelihood(d, Assignment(labels, k), p, w, true);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int rep = 0; rep < 30; ++rep) {
      std::shuffle(perm.begin(), perm.end(), rng);
      Matrix dp(n, n);
      Labels lp(n);
      for (int i = 0; i < n; ++i) {
        lp[i] = labels[perm[i]];
        for (int j = 0; j < n; ++j) dp(i, j) = d(perm[i], perm[j]);
      }
      CHECK(total_log_likelihood(DistanceMatrix(dp), Assignment(lp, k), p, w, true) ==
            doctest::Approx(base).epsilon(1e-13));
    }
  }

  TEST_CASE("graph affinity") {
    Rng rng = make_rng(25);
    const DistanceMatrix d = random_distances(6, rng);
    const GraphAffinity g1 = affinity_from_distance(d, 1.5, 1.0);
    for (int i = 0; i < 6; ++i) {
      CHECK(g1.a(i, i) == 0.0);
      for (int j = 0; j < 6; ++j) {
        CHECK(g1.a(i, j) == g1.a(j, i));
        if (i != j) {
          CHECK(g1.a(i, j) > 0.0);
          CHECK(g1.a(i, j) == doctest::Approx(g1.kappa - d(i, j) / 1.5));
        }
      }
    }
    const GraphAffinity g2 = affinity_from_distance(d, 1.5, 2.5);
    double min_off = INFINITY;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        if (i != j) min_off = std::min(min_off, g2.a(i, j));
    CHECK(min_off == doctest::Approx(1e-9).epsilon(1e-3));

    Matrix zero = d.values();
    zero(0, 1) = zero(1, 0) = 0.0;
    CHECK_THROWS(affinity_from_distance(DistanceMatrix(zero), 1.0, 2.0));
  }

  TEST_CASE("shifting kappa shifts the affinity trace by n times the shift") {
    Rng rng = make_rng(26);
    const int n = 7;
    const DistanceMatrix d = random_distances(n, rng);
    const GraphAffinity g = affinity_from_distance(d, 1.0, 2.0);
    const Assignment c(random_labels(n, 3, rng), 3);
    Matrix shifted = g.a;
    const double shift = 0.75;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) shifted(i, j) += shift;
    // With a zero diagonal the shift contributes (n_h - 1) per cluster.
    double expected = 0.0;
    for (int nh : c.counts())
      if (nh > 0) expected += shift * (nh - 1);
    CHECK(affinity_trace(shifted, c) - affinity_trace(g.a, c) == doctest::Approx(expected));
    Matrix full_shift = g.a.array() + shift;
    CHECK(affinity_trace(full_shift, c) - affinity_trace(g.a, c) == doctest::Approx(n * shift));
  }

  TEST_CASE("normalized cut") {
    const Matrix a = (Matrix(2, 2) << 0, 1, 1, 0).finished();
    CHECK(ncut_loss(a, Assignment({0, 1}, 2)) == doctest::Approx(1.0));
    CHECK(ncut_loss(a, Assignment({0, 0}, 1)) == 0.0);
    Rng rng = make_rng(27);
    for (int k : {1, 2, 3, 5}) {
      for (int rep = 0; rep < 25; ++rep) {
        const int n = uniform_int(rng, k, 15);
        const Matrix ar = random_symmetric(n, rng, 0.0, 3.0);
        const Assignment c(random_labels(n, k, rng), k);
        CHECK(ncut_loss(ar, c) >= 0.0);
        CHECK(std::abs(ncut_identity_residual(ar, c)) < 1e-10);
      }
    }
  }

  TEST_CASE("bregman divergence, squared norm") {
    CHECK_THROWS(parse_bregman_generator("kl"));
    const BregmanGenerator phi = parse_bregman_generator("squared_euclidean");
    Rng rng = make_rng(28);
    const Vector x = gaussian_matrix(4, 1, rng), y = gaussian_matrix(4, 1, rng);
    CHECK(bregman_divergence(phi, x, x) == 0.0);
    CHECK(bregman_divergence(phi, x, y) == doctest::Approx((x - y).squaredNorm()).epsilon(1e-14));

    for (int rep = 0; rep < 10; ++rep) {
      const Matrix pts = gaussian_matrix(10, 3, rng, 2.0);
      const Assignment c(random_labels(10, 3, rng), 3);
      // Brute-force double sum against the centred single sum.
      CHECK(std::abs(model_divergence(pts, c, phi) - distance_divergence(pts, c, phi)) < 1e-10);
      const Vector mean = pts.colwise().mean();
      double pairs = 0.0, centred = 0.0;
      for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) pairs += (pts.row(i) - pts.row(j)).squaredNorm();
        centred += 2.0 * (pts.row(i).transpose() - mean).squaredNorm();
      }
      CHECK(pairs == doctest::Approx(10.0 * centred).epsilon(1e-13));
    }
  }

  TEST_CASE("divergence identity in expectation") {
    // E B(x, x') = E B(x, mu) + E B(mu, x) for independent x, x'.
    Rng rng = make_rng(29);
    std::normal_distribution<double> z(0.0, 1.5);
    const BregmanGenerator phi = BregmanGenerator::SquaredEuclidean;
    const Vector mu = Vector::Constant(3, 0.0);
    double lhs = 0.0, rhs = 0.0;
    const int m = 200000;
    for (int i = 0; i < m; ++i) {
      Vector a(3), b(3);
      for (int j = 0; j < 3; ++j) {
        a(j) = z(rng);
        b(j) = z(rng);
      }
      lhs += bregman_divergence(phi, a, b);
      rhs += bregman_divergence(phi, a, mu) + bregman_divergence(phi, mu, a);
    }
    CHECK(lhs / m == doctest::Approx(rhs / m).epsilon(0.02));
  }
}
