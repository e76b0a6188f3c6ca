#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Cluster labels, zero-based. Files on disk use one-based labels.
using Labels = std::vector<int>;

using Rng = std::mt19937_64;

/// Input violates a data contract (shape, symmetry, finiteness, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A tuning parameter is outside its allowed range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A density or transform was evaluated outside its domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An algorithm could not produce a usable answer (degenerate input,
/// eigen-solver failure, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stream for chain `chain_id` of a run seeded with `seed`.
inline Rng make_rng(std::uint64_t seed, std::uint64_t chain_id = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chain_id),
                    static_cast<std::uint32_t>(chain_id >> 32)};
  return Rng(seq);
}

}  // namespace bdc
