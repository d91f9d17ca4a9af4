#pragma once

#include "orthotail/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace orthotail::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

inline Matrix random_symmetric(Eigen::Index p, std::uint64_t seed) {
  const Matrix a = random_matrix(p, p, seed);
  Matrix s(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

inline Vector random_unit(Eigen::Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vector v(p);
  for (Eigen::Index i = 0; i < p; ++i) v(i) = n(rng);
  return v / v.norm();
}

// Classical Jacobi: largest-pivot rotations with atan2 angles, iterated to
// rounding level.
struct OracleSpectrum {
  std::vector<double> values;  // descending
  std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

inline OracleSpectrum oracle_eig(const Matrix& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  std::vector<std::vector<double>> a(n, std::vector<double>(n));
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i][i] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      a[i][j] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      norm += a[i][j] * a[i][j];
    }
  }
  norm = std::sqrt(norm);
  for (std::size_t iter = 0; iter < 200 * n * n + 100; ++iter) {
    std::size_t p = 0, q = 1;
    double big = -1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (std::abs(a[i][j]) > big) big = std::abs(a[i][j]), p = i, q = j;
    if (n < 2 || big <= 1e-17 * norm || big == 0.0) break;
    const double theta = 0.5 * std::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
    const double c = std::cos(theta), s = std::sin(theta);
    for (std::size_t k = 0; k < n; ++k) {
      const double akp = a[k][p], akq = a[k][q];
      a[k][p] = c * akp - s * akq;
      a[k][q] = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double apk = a[p][k], aqk = a[q][k];
      a[p][k] = c * apk - s * aqk;
      a[q][k] = s * apk + c * aqk;
    }
    for (std::size_t k = 0; k < n; ++k) {
      const double vkp = v[k][p], vkq = v[k][q];
      v[k][p] = c * vkp - s * vkq;
      v[k][q] = s * vkp + c * vkq;
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  OracleSpectrum out;
  for (const auto k : order) {
    out.values.push_back(a[k][k]);
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = v[i][k];
    out.vectors.push_back(std::move(col));
  }
  return out;
}

// Straight loop (1/N) sum_k z_k z_k^T.
inline Matrix naive_second_moment(const Matrix& z) {
  Matrix s = Matrix::Zero(z.rows(), z.rows());
  for (Eigen::Index k = 0; k < z.cols(); ++k)
    for (Eigen::Index i = 0; i < z.rows(); ++i)
      for (Eigen::Index j = 0; j < z.rows(); ++j) s(i, j) += z(i, k) * z(j, k);
  return s / static_cast<double>(z.cols());
}

inline double rel_frobenius(const Matrix& a, const Matrix& b) {
  const double nb = b.norm();
  return nb == 0.0 ? a.norm() : (a - b).norm() / nb;
}

}  // namespace orthotail::testing
