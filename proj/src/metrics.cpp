#include "bdc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace bdc {
namespace {

std::vector<int> compact(std::span<const int> labels) {
  std::map<int, int> ids;
  std::vector<int> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = ids.try_emplace(labels[i], static_cast<int>(ids.size()));
    out[i] = it->second;
  }
  return out;
}

void check_lengths(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size())
    throw ValidationError("label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  if (a.empty()) throw ValidationError("label vectors are empty");
}

double choose2(double x) { return 0.5 * x * (x - 1.0); }

double entropy(const Vector& counts, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i)
    if (counts(i) > 0.0) h -= counts(i) / n * std::log(counts(i) / n);
  return h;
}

double mutual_information(const Matrix& table, double n) {
  const Vector rows = table.rowwise().sum();
  const Vector cols = table.colwise().sum().transpose();
  double mi = 0.0;
  for (Eigen::Index i = 0; i < table.rows(); ++i)
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      const double nij = table(i, j);
      if (nij > 0.0) mi += nij / n * std::log(n * nij / (rows(i) * cols(j)));
    }
  return std::max(mi, 0.0);
}

// E[MI] under random permutation with fixed marginals.
double expected_mutual_information(const Vector& a, const Vector& b, int n) {
  const double nd = n;
  std::vector<double> lg(n + 2);
  for (int i = 0; i <= n + 1; ++i) lg[i] = std::lgamma(static_cast<double>(i) + 1.0);  // log(i!)
  double emi = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const int ai = static_cast<int>(a(i));
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const int bj = static_cast<int>(b(j));
      const int lo = std::max(1, ai + bj - n);
      const int hi = std::min(ai, bj);
      for (int nij = lo; nij <= hi; ++nij) {
        const double term = nij / nd * std::log(nd * nij / (static_cast<double>(ai) * bj));
        const double log_p = lg[ai] + lg[bj] + lg[n - ai] + lg[n - bj] - lg[n] - lg[nij] - lg[ai - nij] -
                             lg[bj - nij] - lg[n - ai - bj + nij];
        emi += term * std::exp(log_p);
      }
    }
  }
  return emi;
}

}  // namespace

Matrix contingency_table(std::span<const int> a, std::span<const int> b) {
  check_lengths(a, b);
  const auto ca = compact(a);
  const auto cb = compact(b);
  const int ka = *std::max_element(ca.begin(), ca.end()) + 1;
  const int kb = *std::max_element(cb.begin(), cb.end()) + 1;
  Matrix t = Matrix::Zero(ka, kb);
  for (size_t i = 0; i < ca.size(); ++i) t(ca[i], cb[i]) += 1.0;
  return t;
}

double ari(std::span<const int> a, std::span<const int> b) {
  const Matrix t = contingency_table(a, b);
  const double n = static_cast<double>(a.size());
  double index = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) index += choose2(t.data()[i]);
  double sum_a = 0.0;
  double sum_b = 0.0;
  const Vector rows = t.rowwise().sum();
  const Vector cols = t.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < rows.size(); ++i) sum_a += choose2(rows(i));
  for (Eigen::Index j = 0; j < cols.size(); ++j) sum_b += choose2(cols(j));
  const double expected = sum_a * sum_b / choose2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;  // both trivial and identical in structure
  return (index - expected) / (max_index - expected);
}

double nmi(std::span<const int> a, std::span<const int> b) {
  const Matrix t = contingency_table(a, b);
  const double n = static_cast<double>(a.size());
  const double ha = entropy(t.rowwise().sum(), n);
  const double hb = entropy(t.colwise().sum().transpose(), n);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  const double denom = 0.5 * (ha + hb);
  return std::clamp(mutual_information(t, n) / denom, 0.0, 1.0);
}

double ami(std::span<const int> a, std::span<const int> b) {
  const Matrix t = contingency_table(a, b);
  const int n = static_cast<int>(a.size());
  if (t.rows() == 1 && t.cols() == 1) return 1.0;
  if (t.rows() == n && t.cols() == n) return 1.0;
  const Vector rows = t.rowwise().sum();
  const Vector cols = t.colwise().sum().transpose();
  const double mi = mutual_information(t, n);
  const double emi = expected_mutual_information(rows, cols, n);
  const double mean_h = 0.5 * (entropy(rows, n) + entropy(cols, n));
  double denom = mean_h - emi;
  const double tiny = std::numeric_limits<double>::epsilon();
  if (std::abs(denom) < tiny) denom = denom < 0.0 ? -tiny : tiny;
  return (mi - emi) / denom;
}

MetricsReport compare_partitions(std::span<const int> a, std::span<const int> b) {
  return {ari(a, b), nmi(a, b), ami(a, b)};
}

}  // namespace bdc
