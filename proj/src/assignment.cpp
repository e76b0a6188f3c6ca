#include "bdc/assignment.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

namespace bdc {

Assignment::Assignment(Labels labels, int k)
    : labels_(std::move(labels)), k_(k), counts_(static_cast<size_t>(std::max(k, 0)), 0) {
  if (k < 1) throw ParameterError("assignment: k must be >= 1");
  for (size_t i = 0; i < labels_.size(); ++i) {
    const int h = labels_[i];
    if (h < 0 || h >= k)
      throw ValidationError("assignment: label " + std::to_string(h) + " at index " +
                            std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
    ++counts_[h];
  }
}

Assignment Assignment::single_cluster(int n, int k) { return Assignment(Labels(n, 0), k); }

std::vector<int> Assignment::members(int h) const {
  std::vector<int> out;
  out.reserve(counts_.at(h));
  for (int i = 0; i < n(); ++i)
    if (labels_[i] == h) out.push_back(i);
  return out;
}

std::vector<std::vector<int>> Assignment::member_lists() const {
  std::vector<std::vector<int>> out(k_);
  for (int h = 0; h < k_; ++h) out[h].reserve(counts_[h]);
  for (int i = 0; i < n(); ++i) out[labels_[i]].push_back(i);
  return out;
}

Matrix Assignment::matrix() const {
  Matrix c = Matrix::Zero(n(), k_);
  for (int i = 0; i < n(); ++i) c(i, labels_[i]) = 1.0;
  return c;
}

int Assignment::occupied(int min_size) const {
  return static_cast<int>(std::count_if(counts_.begin(), counts_.end(),
                                        [&](int c) { return c > min_size; }));
}

Labels canonical_labels(std::span<const int> labels) {
  std::unordered_map<int, int> remap;
  Labels out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    out.push_back(it->second);
  }
  return out;
}

int count_labels(std::span<const int> labels) {
  Labels c = canonical_labels(labels);
  return c.empty() ? 0 : *std::max_element(c.begin(), c.end()) + 1;
}

}  // namespace bdc
