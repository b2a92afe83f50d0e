#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "oseen/errors.hpp"

namespace oseen {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

struct Triplet {
  int row;
  int col;
  double value;
};

/// Row-compressed sparse matrix (general, possibly rectangular).
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Duplicates are summed in insertion order, so the result is deterministic for a fixed assembly order.
  SparseMatrix(int rows, int cols, std::vector<Triplet> triplets) : rows_(rows), cols_(cols) {
    std::stable_sort(triplets.begin(), triplets.end(),
                     [](const Triplet& a, const Triplet& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });
    row_ptr_.assign(rows_ + 1, 0);
    for (std::size_t k = 0; k < triplets.size();) {
      const auto& t = triplets[k];
      if (t.row < 0 || t.row >= rows_ || t.col < 0 || t.col >= cols_)
        throw InvalidArgument("SparseMatrix: triplet index out of range");
      double v = 0.0;
      std::size_t e = k;
      for (; e < triplets.size() && triplets[e].row == t.row && triplets[e].col == t.col; ++e) v += triplets[e].value;
      col_idx_.push_back(t.col);
      values_.push_back(v);
      ++row_ptr_[t.row + 1];
      k = e;
    }
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nonzeros() const { return values_.size(); }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  double at(int i, int j) const {
    auto first = col_idx_.begin() + row_ptr_[i], last = col_idx_.begin() + row_ptr_[i + 1];
    auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? values_[it - col_idx_.begin()] : 0.0;
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
      y[i] = s;
    }
  }

  Vector operator*(std::span<const double> x) const {
    Vector y(rows_);
    multiply(x, y);
    return y;
  }

  /// y = A^T x
  Vector multiply_transpose(std::span<const double> x) const {
    Vector y(cols_, 0.0);
    for (int i = 0; i < rows_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += values_[k] * x[i];
    return y;
  }

  Vector diagonal() const {
    Vector d(std::min(rows_, cols_), 0.0);
    for (int i = 0; i < static_cast<int>(d.size()); ++i) d[i] = at(i, i);
    return d;
  }

  std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(values_.size());
    for (int i = 0; i < rows_; ++i)
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out.push_back({i, col_idx_[k], values_[k]});
    return out;
  }

  /// Keep rows/columns with a non-negative entry in the maps, renumbered to those entries.
  SparseMatrix restrict(const std::vector<int>& row_map, int new_rows, const std::vector<int>& col_map,
                        int new_cols) const {
    std::vector<Triplet> out;
    for (int i = 0; i < rows_; ++i) {
      if (row_map[i] < 0) continue;
      for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        const int j = col_map[col_idx_[k]];
        if (j >= 0) out.push_back({row_map[i], j, values_[k]});
      }
    }
    return SparseMatrix(new_rows, new_cols, std::move(out));
  }

  SparseMatrix scaled(double s) const {
    SparseMatrix m = *this;
    for (auto& v : m.values_) v *= s;
    return m;
  }

  /// a*A + b*B (patterns may differ).
  friend SparseMatrix combine(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
    if (A.rows_ != B.rows_ || A.cols_ != B.cols_) throw InvalidArgument("combine: shape mismatch");
    auto ta = A.triplets();
    for (auto& t : ta) t.value *= a;
    for (auto t : B.triplets()) ta.push_back({t.row, t.col, b * t.value});
    return SparseMatrix(A.rows_, A.cols_, std::move(ta));
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// Square sparse matrix whose symmetry is asserted on construction. The full pattern is stored.
class SparseSym {
 public:
  static constexpr double kSymmetryTol = 1e-12;

  SparseSym() = default;
  explicit SparseSym(SparseMatrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols()) throw InvalidArgument("SparseSym: matrix is not square");
    const auto& rp = m_.row_ptr();
    const auto& ci = m_.col_idx();
    const auto& v = m_.values();
    for (int i = 0; i < m_.rows(); ++i)
      for (int k = rp[i]; k < rp[i + 1]; ++k) {
        const double aij = v[k], aji = m_.at(ci[k], i);
        if (std::abs(aij - aji) > kSymmetryTol * (1.0 + std::abs(aij)))
          throw InvalidArgument("SparseSym: asymmetric entry (" + std::to_string(i) + ", " + std::to_string(ci[k]) + ")");
      }
  }

  int size() const { return m_.rows(); }
  const SparseMatrix& matrix() const { return m_; }
  void multiply(std::span<const double> x, std::span<double> y) const { m_.multiply(x, y); }
  Vector operator*(std::span<const double> x) const { return m_ * x; }
  double at(int i, int j) const { return m_.at(i, j); }

  double quadratic_form(std::span<const double> x) const { return dot(x, m_ * x); }

  SparseSym restrict(const std::vector<int>& map, int n) const { return SparseSym(m_.restrict(map, n, map, n)); }

  friend SparseSym combine(double a, const SparseSym& A, double b, const SparseSym& B) {
    return SparseSym(combine(a, A.m_, b, B.m_));
  }

 private:
  SparseMatrix m_;
};

/// Weights m_i = integral of basis function i; fixes the additive constant via m^T x = 0.
struct DeflationVector {
  Vector weights;

  explicit DeflationVector(Vector m) : weights(std::move(m)) {
    total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(std::abs(total) > 0.0)) throw InvalidArgument("DeflationVector: weights sum to zero");
  }

  double total = 1.0;

  /// x <- x - (m^T x / m^T 1) 1, which leaves A x unchanged when constants span ker A.
  void project(std::span<double> x) const {
    const double c = dot(weights, x) / total;
    for (auto& v : x) v -= c;
  }
};

enum class Preconditioner { none, jacobi };

struct CgOptions {
  double tol = 1e-10;
  int max_iter = -1;  // -1: 10 n
  Preconditioner precond = Preconditioner::jacobi;
  const DeflationVector* deflate = nullptr;
  /// Called with (iteration, iterate) after each update.
  std::function<void(int, std::span<const double>)> monitor;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  double rel_residual = 0.0;
};

namespace detail {
inline void remove_mean(std::span<double> v) {
  if (v.empty()) return;
  const double c = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (auto& x : v) x -= c;
}
}  // namespace detail

/// Matrix-free symmetric operator: y = A x, plus its diagonal for Jacobi preconditioning (may be empty).
struct LinearOperator {
  int size = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
  Vector diagonal;
};

/// Preconditioned conjugate gradients. With a deflation vector the system may be singular with
/// ker A = constants; the right-hand side is made compatible and the solution satisfies m^T x = 0.
inline CgResult cg_solve(const LinearOperator& A, Vector b, const CgOptions& opt = {}, std::optional<Vector> x0 = {}) {
  const int n = A.size;
  if (n == 0) throw InvalidArgument("cg_solve: empty system");
  if (static_cast<int>(b.size()) != n) throw InvalidArgument("cg_solve: right-hand side size mismatch");
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 10 * n;

  if (opt.deflate) detail::remove_mean(b);
  CgResult res;
  res.x = x0 ? std::move(*x0) : Vector(n, 0.0);
  if (opt.deflate) opt.deflate->project(res.x);

  const double bnorm = norm2(b);
  if (!std::isfinite(bnorm)) throw Divergence("cg_solve: non-finite right-hand side");
  if (bnorm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    return res;
  }

  Vector inv_diag(n, 1.0);
  if (opt.precond == Preconditioner::jacobi && !A.diagonal.empty()) {
    for (int i = 0; i < n; ++i) inv_diag[i] = A.diagonal[i] > 0.0 ? 1.0 / A.diagonal[i] : 1.0;
  }

  Vector r(n), z(n), p(n), q(n);
  auto true_residual = [&] {
    A.apply(res.x, q);
    for (int i = 0; i < n; ++i) r[i] = b[i] - q[i];
    if (opt.deflate) detail::remove_mean(r);
  };
  true_residual();
  std::vector<double> history{norm2(r) / bnorm};
  res.rel_residual = history.back();
  if (res.rel_residual <= opt.tol) return res;

  bool restart = true;
  double rz = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    if (restart) {
      p = z;
      restart = false;
    } else {
      const double beta = rz_new / rz;
      for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    rz = rz_new;
    A.apply(p, q);
    const double pq = dot(p, q);
    if (!std::isfinite(pq) || pq <= 0.0) {
      if (!std::isfinite(pq)) throw Divergence("cg_solve: non-finite values at iteration " + std::to_string(it));
      throw NonConvergence("cg_solve: breakdown (p^T A p <= 0) at iteration " + std::to_string(it), history);
    }
    const double alpha = rz / pq;
    axpy(alpha, p, res.x);
    axpy(-alpha, q, r);
    if (opt.deflate) {
      opt.deflate->project(res.x);
      detail::remove_mean(r);
    }
    if (opt.monitor) opt.monitor(it, res.x);
    res.iterations = it;
    double rel = norm2(r) / bnorm;
    if (!std::isfinite(rel)) throw Divergence("cg_solve: non-finite residual at iteration " + std::to_string(it));
    if (rel <= opt.tol) {
      // confirm with the true residual; drift from the recursion triggers a restart
      true_residual();
      rel = norm2(r) / bnorm;
      if (rel <= opt.tol) {
        history.push_back(rel);
        res.rel_residual = rel;
        return res;
      }
      restart = true;
    }
    history.push_back(rel);
    res.rel_residual = rel;
  }
  throw NonConvergence("cg_solve: no convergence in " + std::to_string(max_iter) +
                           " iterations (relative residual " + std::to_string(res.rel_residual) + ")",
                       std::move(history));
}

inline CgResult cg_solve(const SparseSym& A, Vector b, const CgOptions& opt = {}, std::optional<Vector> x0 = {}) {
  LinearOperator op{A.size(), [&A](std::span<const double> x, std::span<double> y) { A.multiply(x, y); },
                    opt.precond == Preconditioner::jacobi ? A.matrix().diagonal() : Vector{}};
  return cg_solve(op, std::move(b), opt, std::move(x0));
}

/// Coordinate text dump: one `i j value` line per stored entry, 0-based.
inline void write_coordinate(std::ostream& os, const SparseMatrix& m) {
  os.precision(17);
  for (const auto& t : m.triplets()) os << t.row << ' ' << t.col << ' ' << t.value << '\n';
}

}  // namespace oseen
