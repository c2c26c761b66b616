#pragma once

// Dense symmetric / tridiagonal primitives: vectors, symmetric storage,
// Householder reflectors, Gram-Schmidt orthonormalization, and symmetric
// eigensolvers (implicit-shift QL on tridiagonals, Householder reduction
// for the dense case).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace kry {

using Vector = std::vector<double>;

namespace tol {
// Module-level defaults. Every routine that consumes one of these accepts
// an override parameter.
inline constexpr double ortho_drop = 1e-10;      // times the input vector norm
inline constexpr double symmetry_check = 1e-12;  // relative, DenseSymmetric::from_rows
}  // namespace tol

// ---------------------------------------------------------------------------
// vector helpers
// ---------------------------------------------------------------------------

inline double dot(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm(const Vector& x) { return std::sqrt(dot(x, x)); }

/// y += a * x
inline void axpy(double a, const Vector& x, Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale_inplace(Vector& x, double a) {
  for (double& v : x) v *= a;
}

inline Vector scaled(const Vector& x, double a) {
  Vector y = x;
  scale_inplace(y, a);
  return y;
}

inline Vector subtract(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("subtract: dimension mismatch");
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
  return z;
}

inline Vector add(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw std::invalid_argument("add: dimension mismatch");
  Vector z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
  return z;
}

inline Vector zeros(int n) { return Vector(static_cast<std::size_t>(n), 0.0); }

inline Vector unit_vector(int n, int k) {
  if (k < 0 || k >= n) throw std::invalid_argument("unit_vector: index out of range");
  Vector e = zeros(n);
  e[static_cast<std::size_t>(k)] = 1.0;
  return e;
}

inline Vector normalized(const Vector& x) {
  const double nx = norm(x);
  if (nx == 0.0) throw std::invalid_argument("normalized: zero vector");
  return scaled(x, 1.0 / nx);
}

// ---------------------------------------------------------------------------
// matrix types
// ---------------------------------------------------------------------------

/// Symmetric matrix with packed lower-triangle storage; (i,j) and (j,i)
/// alias the same entry, so symmetry holds exactly by construction.
class DenseSymmetric {
 public:
  explicit DenseSymmetric(int n) : n_(n) {
    if (n <= 0) throw std::invalid_argument("DenseSymmetric: order must be positive");
    a_.assign(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0);
  }

  int order() const { return n_; }

  double operator()(int i, int j) const { return a_[idx(i, j)]; }
  void set(int i, int j, double v) { a_[idx(i, j)] = v; }

  Vector apply(const Vector& v) const {
    if (static_cast<int>(v.size()) != n_) throw std::invalid_argument("DenseSymmetric::apply: dimension mismatch");
    Vector y = zeros(n_);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += (*this)(i, j) * v[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Build from full row data; off-pairs must agree to rel_tol * max|entry|
  /// and are averaged into the packed representation.
  static DenseSymmetric from_rows(const std::vector<Vector>& rows,
                                  double rel_tol = tol::symmetry_check) {
    const int n = static_cast<int>(rows.size());
    DenseSymmetric A(n);
    double scale = 0.0;
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != n) throw std::invalid_argument("from_rows: ragged rows");
      for (double v : r) scale = std::max(scale, std::abs(v));
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        const double a = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        const double b = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
        if (std::abs(a - b) > rel_tol * std::max(scale, 1.0))
          throw std::invalid_argument("from_rows: input is not symmetric");
        A.set(i, j, 0.5 * (a + b));
      }
    return A;
  }

  static DenseSymmetric identity(int n) {
    DenseSymmetric I(n);
    for (int i = 0; i < n; ++i) I.set(i, i, 1.0);
    return I;
  }

 private:
  std::size_t idx(int i, int j) const {
    if (i < 0 || j < 0 || i >= n_ || j >= n_) throw std::out_of_range("DenseSymmetric: index");
    if (i < j) std::swap(i, j);
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }

  int n_;
  std::vector<double> a_;
};

/// Symmetric tridiagonal matrix: diag alpha_1..alpha_n, offdiag beta_1..beta_{n-1}.
struct SymTridiagonal {
  Vector diag;
  Vector offdiag;

  SymTridiagonal() = default;
  SymTridiagonal(Vector d, Vector e) : diag(std::move(d)), offdiag(std::move(e)) {
    if (diag.empty()) throw std::invalid_argument("SymTridiagonal: empty diagonal");
    if (offdiag.size() + 1 != diag.size())
      throw std::invalid_argument("SymTridiagonal: offdiag must have n-1 entries");
  }

  int order() const { return static_cast<int>(diag.size()); }

  Vector apply(const Vector& v) const {
    const int n = order();
    if (static_cast<int>(v.size()) != n) throw std::invalid_argument("SymTridiagonal::apply: dimension mismatch");
    Vector y(v.size());
    for (int i = 0; i < n; ++i) {
      double s = diag[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
      if (i > 0) s += offdiag[static_cast<std::size_t>(i - 1)] * v[static_cast<std::size_t>(i - 1)];
      if (i + 1 < n) s += offdiag[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i + 1)];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  DenseSymmetric to_dense() const {
    const int n = order();
    DenseSymmetric A(n);
    for (int i = 0; i < n; ++i) A.set(i, i, diag[static_cast<std::size_t>(i)]);
    for (int i = 0; i + 1 < n; ++i) A.set(i, i + 1, offdiag[static_cast<std::size_t>(i)]);
    return A;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : diag) m = std::max(m, std::abs(v));
    for (double v : offdiag) m = std::max(m, std::abs(v));
    return m;
  }
};

inline Vector apply(const DenseSymmetric& A, const Vector& v) { return A.apply(v); }
inline Vector apply(const SymTridiagonal& T, const Vector& v) { return T.apply(v); }

// ---------------------------------------------------------------------------
// Householder reflector
// ---------------------------------------------------------------------------

/// H = I - 2 w w^t / ||w||^2, the reflector that reverses its axis.
class Reflector {
 public:
  explicit Reflector(const Vector& axis) {
    const double na = norm(axis);
    if (na == 0.0) throw std::invalid_argument("Reflector: zero axis");
    w_ = scaled(axis, 1.0 / na);
  }

  const Vector& axis() const { return w_; }
  int dim() const { return static_cast<int>(w_.size()); }

  Vector apply(const Vector& x) const {
    if (x.size() != w_.size()) throw std::invalid_argument("Reflector::apply: dimension mismatch");
    Vector y = x;
    axpy(-2.0 * dot(w_, x), w_, y);
    return y;
  }

  /// H A H as a dense symmetric matrix (rank-2 update of A).
  DenseSymmetric conjugate(const DenseSymmetric& A) const {
    const int n = A.order();
    if (n != dim()) throw std::invalid_argument("Reflector::conjugate: dimension mismatch");
    const Vector u = A.apply(w_);
    const double g = dot(w_, u);
    DenseSymmetric B(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        const auto si = static_cast<std::size_t>(i);
        const auto sj = static_cast<std::size_t>(j);
        B.set(i, j, A(i, j) - 2.0 * u[si] * w_[sj] - 2.0 * w_[si] * u[sj] + 4.0 * g * w_[si] * w_[sj]);
      }
    return B;
  }

 private:
  Vector w_;  // unit axis
};

inline Reflector make_reflector(const Vector& w) { return Reflector(w); }

// ---------------------------------------------------------------------------
// orthonormalization
// ---------------------------------------------------------------------------

struct OrthoResult {
  std::vector<Vector> basis;
  int rank = 0;
};

/// Modified Gram-Schmidt with one full reorthogonalization pass. Vectors whose
/// residual after reorthogonalization falls below drop_tol times their input
/// norm are dropped; rank reflects the retained count.
inline OrthoResult orthonormalize(const std::vector<Vector>& vectors,
                                  double drop_tol = tol::ortho_drop) {
  if (vectors.empty()) throw std::invalid_argument("orthonormalize: empty input");
  const std::size_t n = vectors.front().size();
  OrthoResult out;
  for (const Vector& v : vectors) {
    if (v.size() != n) throw std::invalid_argument("orthonormalize: inconsistent dimensions");
    const double vn = norm(v);
    Vector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : out.basis) axpy(-dot(q, r), q, r);
    const double rn = norm(r);
    if (rn <= drop_tol * vn || rn == 0.0) continue;
    scale_inplace(r, 1.0 / rn);
    out.basis.push_back(std::move(r));
  }
  out.rank = static_cast<int>(out.basis.size());
  return out;
}

// ---------------------------------------------------------------------------
// symmetric eigensolvers
// ---------------------------------------------------------------------------

struct EigenDecomposition {
  Vector values;                // ascending
  std::vector<Vector> vectors;  // orthonormal columns, vectors[k] pairs with values[k]
};

namespace detail {

/// Implicit-shift QL on a tridiagonal (d, e); the columns in z are rotated
/// alongside so that on exit z[k] is the eigenvector of d[k]. e[i] couples
/// entries i and i+1; e.size() == d.size() with the last slot as workspace.
inline void tql2(std::vector<double>& d, std::vector<double>& e, std::vector<Vector>& z) {
  const int n = static_cast<int>(d.size());
  if (n == 1) return;
  const double eps = std::numeric_limits<double>::epsilon();
  e[static_cast<std::size_t>(n - 1)] = 0.0;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 60) throw std::runtime_error("tql2: iteration limit");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        bool underflow = false;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (std::size_t k = 0; k < z.front().size(); ++k) {
            f = z[static_cast<std::size_t>(i + 1)][k];
            z[static_cast<std::size_t>(i + 1)][k] = s * z[static_cast<std::size_t>(i)][k] + c * f;
            z[static_cast<std::size_t>(i)][k] = c * z[static_cast<std::size_t>(i)][k] - s * f;
          }
        }
        if (underflow && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

inline void sort_eigen(EigenDecomposition& ed) {
  const int n = static_cast<int>(ed.values.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return ed.values[static_cast<std::size_t>(a)] < ed.values[static_cast<std::size_t>(b)]; });
  Vector values(static_cast<std::size_t>(n));
  std::vector<Vector> vectors(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    values[static_cast<std::size_t>(k)] = ed.values[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    vectors[static_cast<std::size_t>(k)] = std::move(ed.vectors[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
  }
  ed.values = std::move(values);
  ed.vectors = std::move(vectors);
}

}  // namespace detail

/// All eigenpairs of a symmetric tridiagonal matrix, values ascending,
/// vectors orthonormal. Implicit-shift QL.
inline EigenDecomposition sym_tridiag_eigen(const SymTridiagonal& T) {
  const int n = T.order();
  std::vector<double> d = T.diag;
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  std::copy(T.offdiag.begin(), T.offdiag.end(), e.begin());
  std::vector<Vector> z;
  z.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) z.push_back(unit_vector(n, k));
  detail::tql2(d, e, z);
  EigenDecomposition ed{std::move(d), std::move(z)};
  detail::sort_eigen(ed);
  return ed;
}

/// All eigenpairs of a dense symmetric matrix: Householder reduction to
/// tridiagonal form followed by the QL sweep, transforms accumulated.
inline EigenDecomposition sym_eigen(const DenseSymmetric& A) {
  const int n = A.order();
  // working copy, row-major
  std::vector<Vector> a(static_cast<std::size_t>(n), Vector(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = A(i, j);
  std::vector<double> d(static_cast<std::size_t>(n), 0.0), e(static_cast<std::size_t>(n), 0.0);

  // Householder reduction (EISPACK tred2 lineage).
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::abs(a[i][static_cast<std::size_t>(k)]);
      if (scale == 0.0) {
        e[static_cast<std::size_t>(i)] = a[i][static_cast<std::size_t>(l)];
      } else {
        for (int k = 0; k <= l; ++k) {
          a[i][static_cast<std::size_t>(k)] /= scale;
          h += a[i][static_cast<std::size_t>(k)] * a[i][static_cast<std::size_t>(k)];
        }
        double f = a[i][static_cast<std::size_t>(l)];
        double g = (f >= 0.0 ? -std::sqrt(h) : std::sqrt(h));
        e[static_cast<std::size_t>(i)] = scale * g;
        h -= f * g;
        a[i][static_cast<std::size_t>(l)] = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          a[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = a[i][static_cast<std::size_t>(j)] / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += a[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] * a[i][static_cast<std::size_t>(k)];
          for (int k = j + 1; k <= l; ++k) g += a[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] * a[i][static_cast<std::size_t>(k)];
          e[static_cast<std::size_t>(j)] = g / h;
          f += e[static_cast<std::size_t>(j)] * a[i][static_cast<std::size_t>(j)];
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = a[i][static_cast<std::size_t>(j)];
          g = e[static_cast<std::size_t>(j)] - hh * f;
          e[static_cast<std::size_t>(j)] = g;
          for (int k = 0; k <= j; ++k)
            a[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] -=
                f * e[static_cast<std::size_t>(k)] + g * a[i][static_cast<std::size_t>(k)];
        }
      }
    } else {
      e[static_cast<std::size_t>(i)] = a[i][static_cast<std::size_t>(l)];
    }
    d[static_cast<std::size_t>(i)] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    const int l = i - 1;
    if (d[static_cast<std::size_t>(i)] != 0.0) {
      for (int j = 0; j <= l; ++j) {
        double g = 0.0;
        for (int k = 0; k <= l; ++k) g += a[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * a[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        for (int k = 0; k <= l; ++k) a[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] -= g * a[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      }
    }
    d[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
    for (int j = 0; j <= l; ++j) {
      a[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 0.0;
      a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 0.0;
    }
  }
  // shift e to the coupling convention e[i] ~ (i, i+1)
  for (int i = 0; i + 1 < n; ++i) e[static_cast<std::size_t>(i)] = e[static_cast<std::size_t>(i + 1)];
  e[static_cast<std::size_t>(n - 1)] = 0.0;

  std::vector<Vector> z;
  z.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    Vector col(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) col[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
    z.push_back(std::move(col));
  }
  detail::tql2(d, e, z);
  EigenDecomposition ed{std::move(d), std::move(z)};
  detail::sort_eigen(ed);
  return ed;
}

/// 2-norm (largest absolute eigenvalue) via the dense eigensolver.
inline double spectral_norm(const DenseSymmetric& A) {
  const EigenDecomposition ed = sym_eigen(A);
  return std::max(std::abs(ed.values.front()), std::abs(ed.values.back()));
}

/// Solve A x = rhs through the eigendecomposition; throws if A is numerically
/// singular (an eigenvalue below rel_tol times the largest magnitude).
inline Vector solve_sym(const DenseSymmetric& A, const Vector& rhs, double rel_tol = 1e-13) {
  const EigenDecomposition ed = sym_eigen(A);
  const double scale = std::max(std::abs(ed.values.front()), std::abs(ed.values.back()));
  Vector x = zeros(A.order());
  for (std::size_t k = 0; k < ed.values.size(); ++k) {
    const double lam = ed.values[k];
    if (std::abs(lam) <= rel_tol * std::max(scale, 1.0))
      throw std::domain_error("solve_sym: singular matrix");
    axpy(dot(ed.vectors[k], rhs) / lam, ed.vectors[k], x);
  }
  return x;
}

}  // namespace kry
