#include "orthotail/linalg.hpp"

#include "orthotail/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace orthotail {

namespace {

constexpr double kSignThreshold = 1e-12;
constexpr double kTieRelative = 1e-10;

void check_finite(const Matrix& m) {
  require(m.allFinite(), ErrorCode::kNonFinite, "matrix contains NaN or Inf");
}

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index j = 1; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) sum += a(i, j) * a(i, j);
  }
  return std::sqrt(2.0 * sum);
}

struct Rotation {
  Eigen::Index p;
  Eigen::Index q;
  double c;
  double s;
};

// Round-robin pairing: round r of a sweep pairs every index with one other,
// so each pair (p, q) appears exactly once per sweep.
std::vector<std::pair<Eigen::Index, Eigen::Index>> round_pairs(Eigen::Index n, Eigen::Index round) {
  const Eigen::Index m = n + (n % 2);
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(m));
  slot[0] = 0;
  for (Eigen::Index i = 1; i < m; ++i) slot[static_cast<std::size_t>(i)] = 1 + (i - 1 + round) % (m - 1);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < m / 2; ++i) {
    Eigen::Index p = slot[static_cast<std::size_t>(i)];
    Eigen::Index q = slot[static_cast<std::size_t>(m - 1 - i)];
    if (p >= n || q >= n) continue;
    if (p > q) std::swap(p, q);
    pairs.emplace_back(p, q);
  }
  return pairs;
}

// Applies the disjoint rotations of one round: A <- J^T A J, V <- V J.
void rotate_round(Matrix& a, Matrix& v, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& pairs,
                  double negligible, std::vector<Rotation>& rot) {
  rot.clear();
  for (const auto& [p, q] : pairs) {
    const double apq = a(p, q);
    if (std::abs(apq) <= negligible) continue;
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    double t;
    if (std::abs(theta) > 1e150) {
      t = 0.5 / theta;
    } else {
      t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
      if (theta < 0.0) t = -t;
    }
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    rot.push_back({p, q, c, t * c});
  }
  if (rot.empty()) return;

  const Eigen::Index n = a.rows();
  for (const auto& r : rot) {
    for (Matrix* m : {&a, &v}) {
      double* cp = m->col(r.p).data();
      double* cq = m->col(r.q).data();
      for (Eigen::Index i = 0; i < n; ++i) {
        const double x = cp[i];
        const double y = cq[i];
        cp[i] = r.c * x - r.s * y;
        cq[i] = r.s * x + r.c * y;
      }
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    double* col = a.col(j).data();
    for (const auto& r : rot) {
      const double x = col[r.p];
      const double y = col[r.q];
      col[r.p] = r.c * x - r.s * y;
      col[r.q] = r.s * x + r.c * y;
    }
  }
  for (const auto& r : rot) {
    a(r.p, r.q) = 0.0;
    a(r.q, r.p) = 0.0;
  }
}

}  // namespace

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  require(m_.rows() == m_.cols(), ErrorCode::kDimensionMismatch, "symmetric matrix must be square");
  check_finite(m_);
  const Eigen::Index n = m_.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double a = m_(i, j);
      const double b = m_(j, i);
      const double scale = std::max({1.0, std::abs(a), std::abs(b)});
      require(std::abs(a - b) <= kSymmetryTolerance * scale, ErrorCode::kAsymmetric,
              "entry (" + std::to_string(i) + "," + std::to_string(j) + ") differs from its transpose");
      const double mean = 0.5 * (a + b);
      m_(i, j) = mean;
      m_(j, i) = mean;
    }
  }
}

void sign_normalize(Eigen::Ref<Vector> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > kSignThreshold) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

EigenDecomposition sym_eig(const SymMatrix& m, const JacobiOptions& options) {
  const Eigen::Index n = m.dim();
  require(n >= 1, ErrorCode::kDimensionZero, "sym_eig on an empty matrix");
  require(n <= kMaxDenseDim, ErrorCode::kDimensionMismatch, "dimension exceeds dense solver limit");
  check_finite(m.matrix());

  Matrix a = m.matrix();
  Matrix v = Matrix::Identity(n, n);
  const double tol = options.relative_off_tolerance * a.norm();

  bool converged = off_diagonal_norm(a) <= tol;
  const Eigen::Index rounds = n + (n % 2) - 1;
  std::vector<std::vector<std::pair<Eigen::Index, Eigen::Index>>> schedule;
  for (Eigen::Index r = 0; r < rounds && !converged; ++r) schedule.push_back(round_pairs(n, r));
  // Entries this small cannot keep the off-diagonal norm above tol.
  const double negligible = tol / (4.0 * static_cast<double>(n));
  std::vector<Rotation> rot;
  for (int sweep = 0; sweep < options.max_sweeps && !converged; ++sweep) {
    for (const auto& pairs : schedule) rotate_round(a, v, pairs, negligible, rot);
    converged = off_diagonal_norm(a) <= tol;
  }
  require(converged, ErrorCode::kNoConvergence, "Jacobi sweeps exhausted");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    out.values(k) = a(src, src);
    Vector col = v.col(src);
    col /= col.norm();
    sign_normalize(col);
    out.vectors.col(k) = col;
  }
  return out;
}

SmallestEigenpair smallest_eigvec(const EigenDecomposition& eig) {
  const Eigen::Index n = eig.values.size();
  require(n >= 1, ErrorCode::kDimensionZero, "empty decomposition");
  const double lambda_min = eig.values(n - 1);
  const double spectrum_scale = eig.values.cwiseAbs().maxCoeff();
  const double tie = std::max(kTieRelative * std::abs(lambda_min),
                              64.0 * std::numeric_limits<double>::epsilon() * spectrum_scale);

  Eigen::Index best = n - 1;
  for (Eigen::Index k = n - 2; k >= 0; --k) {
    if (eig.values(k) - lambda_min > tie) break;
    const auto& cand = eig.vectors.col(k);
    const auto& cur = eig.vectors.col(best);
    if (std::lexicographical_compare(cand.begin(), cand.end(), cur.begin(), cur.end())) best = k;
  }
  return {eig.vectors.col(best), lambda_min};
}

SmallestEigenpair smallest_eigvec(const SymMatrix& m) { return smallest_eigvec(sym_eig(m)); }

double top_k_mean_eigval(const EigenDecomposition& eig, std::size_t k) {
  require(k >= 1, ErrorCode::kConfigInvalid, "k must be positive");
  const auto n = static_cast<std::size_t>(eig.values.size());
  require(n >= 1, ErrorCode::kDimensionZero, "empty decomposition");
  const auto eff = static_cast<Eigen::Index>(std::min(k, n));
  return eig.values.head(eff).mean();
}

double top_k_mean_eigval(const SymMatrix& m, std::size_t k) { return top_k_mean_eigval(sym_eig(m), k); }

Matrix gram(const Matrix& x) {
  const Eigen::Index p = x.rows();
  Matrix g = Matrix::Zero(p, p);
  if (x.cols() == 0) return g;
  g.selfadjointView<Eigen::Lower>().rankUpdate(x);
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}

}  // namespace orthotail
