#pragma once

#include "bdc/common.hpp"

#include <span>

namespace bdc {

/// Hard cluster assignment of n observations into at most k clusters.
///
/// Holds the label vector; the n x k one-hot matrix C is produced on
/// demand. Empty clusters are allowed.
class Assignment {
 public:
  Assignment() = default;
  Assignment(Labels labels, int k);

  /// All observations in cluster 0.
  static Assignment single_cluster(int n, int k = 1);

  [[nodiscard]] int n() const { return static_cast<int>(labels_.size()); }
  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] const Labels& labels() const { return labels_; }
  [[nodiscard]] int operator[](int i) const { return labels_[i]; }

  [[nodiscard]] const std::vector<int>& counts() const { return counts_; }
  [[nodiscard]] std::vector<int> members(int h) const;
  [[nodiscard]] std::vector<std::vector<int>> member_lists() const;

  /// One-hot view C with C(i, h) = 1 iff labels[i] == h.
  [[nodiscard]] Matrix matrix() const;

  /// Number of clusters with more than `min_size` members.
  [[nodiscard]] int occupied(int min_size = 0) const;

  bool operator==(const Assignment& other) const = default;

 private:
  Labels labels_;
  int k_ = 0;
  std::vector<int> counts_;
};

/// Relabel clusters in order of first appearance (0, 1, 2, ...). Two
/// partitions are equal up to label permutation iff their canonical forms
/// are equal.
Labels canonical_labels(std::span<const int> labels);

/// Number of distinct labels.
int count_labels(std::span<const int> labels);

}  // namespace bdc
