#pragma once

#include "bdc/common.hpp"
#include "bdc/distmat.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testing {

using bdc::Labels;
using bdc::Matrix;
using bdc::Rng;
using bdc::Vector;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Matrix gaussian_matrix(int rows, int cols, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = z(rng);
  return m;
}

inline Matrix random_symmetric(int n, Rng& rng, double lo, double hi) {
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) a(i, j) = a(j, i) = uniform(rng, lo, hi);
  return a;
}

inline bdc::DistanceMatrix random_distances(int n, Rng& rng, double lo = 0.1, double hi = 3.0) {
  return bdc::DistanceMatrix(random_symmetric(n, rng, lo, hi));
}

inline Labels random_labels(int n, int k, Rng& rng) {
  Labels l(n);
  for (auto& v : l) v = uniform_int(rng, 0, k - 1);
  return l;
}

/// Two tight groups far apart; labels 0..0 then 1..1.
inline Matrix two_blob_points(int per_blob, Rng& rng, double gap = 10.0, double sd = 0.3) {
  Matrix x = gaussian_matrix(2 * per_blob, 2, rng, sd);
  for (int i = per_blob; i < 2 * per_blob; ++i) x.row(i).array() += gap;
  return x;
}

inline Labels two_blob_labels(int per_blob) {
  Labels l(2 * per_blob, 0);
  for (int i = per_blob; i < 2 * per_blob; ++i) l[i] = 1;
  return l;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("bdc_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

inline Moments sample_moments(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, s / static_cast<double>(v.size() - 1)};
}

}  // namespace testing
