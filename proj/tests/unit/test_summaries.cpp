#include "bdc/summaries.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace bdc;
using namespace testing;

namespace {

Trace trace_from(const std::vector<Labels>& draws, int k) {
  Trace t;
  t.n = static_cast<int>(draws.front().size());
  t.k = k;
  t.coassign_sum = Matrix::Zero(t.n, t.n);
  for (const auto& l : draws) {
    t.draws.push_back(l);
    for (int i = 0; i < t.n; ++i)
      for (int j = 0; j < t.n; ++j) t.coassign_sum(i, j) += l[i] == l[j];
  }
  return t;
}

double vi_oracle(const Labels& a, const Labels& b) {
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> cab;
  const double n = static_cast<double>(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    cab[{a[i], b[i]}] += 1;
  }
  // VI = sum_ij r_ij (log(p_i / r_ij) + log(q_j / r_ij))
  double vi = 0.0;
  for (const auto& [key, c] : cab) {
    const double r = c / n;
    vi += r * (std::log(ca[key.first] / n / r) + std::log(cb[key.second] / n / r));
  }
  return vi;
}

}  // namespace

TEST_SUITE("summaries") {
  TEST_CASE("co-assignment mean of draws") {
    const Trace t = trace_from({{0, 0, 1}, {0, 1, 1}}, 2);
    const CoAssignmentMatrix s = coassignment_from_trace(t);
    CHECK(s.n_draws == 2);
    const Matrix expected = (Matrix(3, 3) << 1, 0.5, 0, 0.5, 1, 0.5, 0, 0.5, 1).finished();
    CHECK((s.values - expected).cwiseAbs().maxCoeff() < 1e-15);
    CHECK_THROWS(coassignment_from_trace(Trace{}));
  }

  TEST_CASE("vi examples and metric properties") {
    const Labels a{0, 0, 1, 1}, b{0, 1, 0, 1};
    CHECK(vi_distance(a, b) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(vi_distance(a, a) == 0.0);
    CHECK(vi_distance(a, Labels{5, 5, 9, 9}) == doctest::Approx(0.0));
    CHECK(vi_distance(Labels{0, 0, 0, 0}, Labels{0, 1, 2, 3}) == doctest::Approx(std::log(4.0)));
    Rng rng = make_rng(61);
    for (int rep = 0; rep < 200; ++rep) {
      const int n = uniform_int(rng, 2, 12);
      const Labels x = random_labels(n, 3, rng), y = random_labels(n, 4, rng), z = random_labels(n, 2, rng);
      CHECK(vi_distance(x, y) == doctest::Approx(vi_oracle(x, y)).epsilon(1e-12));
      CHECK(vi_distance(x, y) == doctest::Approx(vi_distance(y, x)).epsilon(1e-14));
      CHECK(vi_distance(x, z) <= vi_distance(x, y) + vi_distance(y, z) + 1e-12);
    }
  }

  TEST_CASE("point estimate agrees with exhaustive search over candidates") {
    Rng rng = make_rng(62);
    for (int rep = 0; rep < 30; ++rep) {
      const int n = uniform_int(rng, 3, 8), k = uniform_int(rng, 2, 3);
      std::vector<Labels> draws;
      const Labels base = random_labels(n, k, rng);
      for (int m = 0; m < 25; ++m) {
        Labels l = base;
        for (auto& v : l)
          if (uniform(rng, 0.0, 1.0) < 0.3) v = uniform_int(rng, 0, k - 1);
        draws.push_back(l);
      }
      const Trace t = trace_from(draws, k);
      double best = INFINITY;
      size_t best_m = 0;
      for (size_t c = 0; c < draws.size(); ++c) {
        double e = 0.0;
        for (const auto& d : draws) e += vi_oracle(draws[c], d);
        e /= static_cast<double>(draws.size());
        if (e < best - 1e-12) {
          best = e;
          best_m = c;
        }
      }
      const PointEstimate pe = point_estimate_vi(t);
      CHECK(pe.expected_vi == doctest::Approx(best).epsilon(1e-10));
      CHECK(vi_distance(pe.labels, draws[best_m]) == doctest::Approx(0.0));
      CHECK(pe.labels == canonical_labels(pe.labels));
      CHECK(expected_vi(t, pe.labels) == doctest::Approx(pe.expected_vi).epsilon(1e-12));
      CHECK(vi_distance(pe.labels, draws[pe.draw_index]) == doctest::Approx(0.0));
    }
  }

  TEST_CASE("point estimate of a constant trace") {
    const Trace t = trace_from(std::vector<Labels>(10, Labels{2, 2, 0, 1}), 3);
    const PointEstimate pe = point_estimate_vi(t);
    CHECK(pe.labels == Labels{0, 0, 1, 2});
    CHECK(pe.expected_vi == 0.0);
    CHECK(pe.distinct_partitions == 1);
    CHECK(pe.draw_index == 0);
  }

  TEST_CASE("simplex projection") {
    CHECK((project_to_simplex((Vector(3) << 0.2, 0.3, 0.5).finished()) - Vector((Vector(3) << 0.2, 0.3, 0.5).finished())).norm() < 1e-15);
    CHECK((project_to_simplex((Vector(2) << 2.0, 0.0).finished()) - Vector::Unit(2, 0)).norm() < 1e-15);
    CHECK((project_to_simplex((Vector(3) << 1.0, 1.0, 1.0).finished()).array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
    Rng rng = make_rng(63);
    for (int rep = 0; rep < 100; ++rep) {
      const Vector v = gaussian_matrix(5, 1, rng, 2.0).col(0);
      const Vector p = project_to_simplex(v);
      CHECK(std::abs(p.sum() - 1.0) < 1e-12);
      CHECK((p.array() >= 0.0).all());
      // Optimality: no random simplex point is closer to v.
      for (int j = 0; j < 20; ++j) {
        Vector q = gaussian_matrix(5, 1, rng).col(0).cwiseAbs();
        q /= q.sum();
        CHECK((v - p).norm() <= (v - q).norm() + 1e-12);
      }
    }
  }

  TEST_CASE("simplex factorization recovers a hard block structure") {
    const Labels l{0, 0, 0, 1, 1, 2, 2, 2};
    const Trace t = trace_from({l}, 3);
    Rng rng = make_rng(64);
    const AssignProbMatrix p = simplex_factorize(coassignment_from_trace(t), 3, rng);
    CHECK(p.objective < 1e-8);
    CHECK((p.values.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((p.values.array() >= 0.0).all());
    const Matrix pp = p.values * p.values.transpose();
    CHECK((pp - coassignment_from_trace(t).values).cwiseAbs().maxCoeff() < 1e-4);
    for (size_t i = 1; i < p.history.size(); ++i) CHECK(p.history[i] <= p.history[i - 1] + 1e-12);
  }

  TEST_CASE("simplex factorization on mixed draws is monotone and feasible") {
    Rng rng = make_rng(65);
    std::vector<Labels> draws;
    for (int m = 0; m < 40; ++m) draws.push_back(random_labels(10, 3, rng));
    const Trace t = trace_from(draws, 3);
    const AssignProbMatrix p = simplex_factorize(coassignment_from_trace(t), 3, rng);
    CHECK((p.values.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((p.values.array() >= -1e-15).all());
    for (size_t i = 1; i < p.history.size(); ++i) CHECK(p.history[i] <= p.history[i - 1] + 1e-12);
    const Matrix r = coassignment_from_trace(t).values - p.values * p.values.transpose();
    CHECK(p.objective == doctest::Approx(r.squaredNorm()).epsilon(1e-9));
  }

  TEST_CASE("uncertainty examples") {
    const Labels est{0, 0, 0, 1};
    // Draw 1 agrees; draw 2 splits off observation 2; draw 3 joins 3 to the rest.
    const Trace t = trace_from({{0, 0, 0, 1}, {0, 0, 1, 1}, {0, 0, 0, 0}}, 2);
    const Vector u = uncertainty(est, t);
    // Observation 0: shares with both peers in draws 1 and 3, one of two in draw 2 (not strict).
    CHECK(u(0) == doctest::Approx(1.0 / 3.0));
    CHECK(u(1) == doctest::Approx(1.0 / 3.0));
    CHECK(u(2) == doctest::Approx(1.0 / 3.0));
    // Observation 3 is alone in the estimate: alone only in draw 1.
    CHECK(u(3) == doctest::Approx(2.0 / 3.0));

    const Trace constant = trace_from(std::vector<Labels>(5, est), 2);
    CHECK(uncertainty(est, constant).cwiseAbs().maxCoeff() == 0.0);
  }
}
