#pragma once

#include "bdc/common.hpp"

#include <span>

namespace bdc {

struct MetricsReport {
  double ari = 0.0;
  double nmi = 0.0;
  /// May be slightly negative when agreement is below chance.
  double ami = 0.0;
};

/// Adjusted Rand index (Hubert-Arabie). Labels may be arbitrary integers.
double ari(std::span<const int> a, std::span<const int> b);

/// Mutual information normalized by the arithmetic mean of the entropies.
/// Two single-cluster partitions give 1.
double nmi(std::span<const int> a, std::span<const int> b);

/// Mutual information adjusted for chance under the hypergeometric model,
/// arithmetic-mean normalization.
double ami(std::span<const int> a, std::span<const int> b);

MetricsReport compare_partitions(std::span<const int> a, std::span<const int> b);

/// Contingency table between two labelings after compacting labels.
Matrix contingency_table(std::span<const int> a, std::span<const int> b);

}  // namespace bdc
