#pragma once

// Indistinguishability constructions: the distinguished basis in which the
// operator splits into [[T, E^t], [E, U]] with a single coupling beta, free
// completions of the unknown block, adversarial SPD completions that blow up
// the residual of any output outside the subspace, reflector twins, the
// projection verdict, and the worst-start search.

#include <array>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "kry/eigen_solvers.hpp"
#include "kry/krylov.hpp"
#include "kry/linalg.hpp"

namespace kry {

class BreakdownError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Orthonormal basis of R^n whose first j columns span K^j(A,b); in it the
/// operator is [[T, E^t],[E, U]] where E vanishes except for beta in its
/// top-right corner, and T, beta are exactly the quantities the Krylov
/// information determines. Column j (0-based) is the next Lanczos vector.
struct DistinguishedForm {
  SymTridiagonal T;           // j x j
  double beta = 0.0;          // nonzero coupling
  std::vector<Vector> basis;  // n orthonormal columns
  int j = 0;

  int dim() const { return static_cast<int>(basis.size()); }
  const Vector& b() const { return basis.front(); }  // b is e_1 in this basis
};

inline DistinguishedForm distinguished_form(const LinearOperator& A, const Vector& b, int j) {
  if (j < 1 || j >= A.dim())
    throw std::invalid_argument("distinguished_form: need 1 <= j < n");
  const auto f = lanczos_factorize(A, b, j);
  if (f.breakdown || f.j < j || f.beta_next == 0.0)
    throw BreakdownError("distinguished_form: Krylov space degenerates before step j");

  const int n = A.dim();
  DistinguishedForm df;
  df.T = f.T;
  df.beta = f.beta_next;
  df.j = j;
  df.basis = f.Q;
  df.basis.push_back(f.q_next);
  // complete with coordinate vectors, dropping the dependent ones
  std::vector<Vector> fill = df.basis;
  for (int k = 0; k < n; ++k) fill.push_back(unit_vector(n, k));
  const auto full = orthonormalize(fill);
  if (full.rank != n) throw std::runtime_error("distinguished_form: completion failed");
  df.basis = full.basis;
  return df;
}

/// Completion: assemble [[T, E^t],[E, U_tilde]] in the distinguished basis
/// and rotate back to the ambient coordinates. Any symmetric U_tilde yields a
/// matrix indistinguishable from the original at degree j.
inline DenseSymmetric complete_with(const DistinguishedForm& df, const DenseSymmetric& U_tilde) {
  const int n = df.dim();
  const int j = df.j;
  if (U_tilde.order() != n - j)
    throw std::invalid_argument("complete_with: completion block must be (n-j) x (n-j)");

  // C = block matrix in distinguished coordinates
  DenseSymmetric C(n);
  for (int a = 0; a < j; ++a) {
    C.set(a, a, df.T.diag[static_cast<std::size_t>(a)]);
    if (a + 1 < j) C.set(a, a + 1, df.T.offdiag[static_cast<std::size_t>(a)]);
  }
  C.set(j, j - 1, df.beta);
  for (int a = 0; a < n - j; ++a)
    for (int c = 0; c <= a; ++c) C.set(j + a, j + c, U_tilde(a, c));

  // A_tilde = W C W^t
  std::vector<Vector> CW(static_cast<std::size_t>(n));  // columns of W C^t = W C
  for (int col = 0; col < n; ++col) {
    Vector acc = zeros(n);
    for (int row = 0; row < n; ++row) {
      const double cij = C(row, col);
      if (cij != 0.0) axpy(cij, df.basis[static_cast<std::size_t>(row)], acc);
    }
    CW[static_cast<std::size_t>(col)] = std::move(acc);  // sum_r W_r C(r, col)
  }
  DenseSymmetric out(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c <= r; ++c) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += df.basis[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] *
             CW[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
      out.set(r, c, s);
    }
  return out;
}

struct AdversaryCertificate {
  DenseSymmetric A_tilde;
  Vector v;
  Vector b;
  double residual = 0.0;
  int indist_degree = 0;

  AdversaryCertificate() : A_tilde(1) {}
};

struct CertificateCheck {
  bool ok = false;
  double max_power_reldiff = 0.0;
  double min_eigenvalue = 0.0;
  double residual_error = 0.0;
};

/// Re-validate an adversarial certificate from raw data: the power sequences
/// agree through the stated degree, the completion is positive definite, and
/// the recorded residual matches a recomputation.
inline CertificateCheck verify(const AdversaryCertificate& c, const LinearOperator& A,
                               double power_tol = 1e-9, double residual_tol = 1e-10) {
  CertificateCheck out;
  Vector pa = c.b, pt = c.b;
  for (int i = 1; i <= c.indist_degree; ++i) {
    pa = A(pa);
    pt = c.A_tilde.apply(pt);
    const double diff = norm(subtract(pa, pt));
    out.max_power_reldiff = std::max(out.max_power_reldiff, diff / std::max(norm(pa), 1e-300));
  }
  out.min_eigenvalue = sym_eigen(c.A_tilde).values.front();
  const double recomputed = norm(subtract(c.b, c.A_tilde.apply(c.v)));
  out.residual_error = std::abs(recomputed - c.residual);
  out.ok = out.max_power_reldiff <= power_tol && out.min_eigenvalue > 0.0 &&
           out.residual_error <= residual_tol * std::max(1.0, c.residual);
  return out;
}

/// For v with a nonzero component g outside K^j, produce an SPD completion
/// A_tilde (diagonal free block t*I) whose residual ||b - A_tilde v|| exceeds
/// the target. Returns nullopt when v lies in K^j: every indistinguishable
/// matrix then acts on v identically, so no adversary exists.
inline std::optional<AdversaryCertificate> adversarial_blowup(const DistinguishedForm& df,
                                                              const Vector& v, double target,
                                                              double in_space_tol = 1e-8) {
  const int n = df.dim();
  const int j = df.j;
  if (static_cast<int>(v.size()) != n)
    throw std::invalid_argument("adversarial_blowup: dimension mismatch");

  // coordinates of v in the distinguished basis
  Vector f(static_cast<std::size_t>(j)), g(static_cast<std::size_t>(n - j));
  for (int a = 0; a < j; ++a) f[static_cast<std::size_t>(a)] = dot(df.basis[static_cast<std::size_t>(a)], v);
  for (int a = 0; a < n - j; ++a)
    g[static_cast<std::size_t>(a)] = dot(df.basis[static_cast<std::size_t>(j + a)], v);
  const double gn = norm(g);
  if (gn <= in_space_tol) return std::nullopt;

  // positive definiteness threshold: t I must dominate the Schur complement
  // E T^{-1} E^t = beta^2 (T^{-1})_{jj} e_1 e_1^t, so T must be PD itself.
  const EigenDecomposition ted = sym_tridiag_eigen(df.T);
  if (ted.values.front() <= 0.0)
    throw std::domain_error("adversarial_blowup: projected block is not positive definite");
  double tinv_jj = 0.0;
  for (std::size_t k = 0; k < ted.values.size(); ++k) {
    const double gj = ted.vectors[k][static_cast<std::size_t>(j - 1)];
    tinv_jj += gj * gj / ted.values[k];
  }
  const double t_pd = df.beta * df.beta * tinv_jj;
  const double fj = f[static_cast<std::size_t>(j - 1)];
  const double t_target = (target + std::abs(df.beta * fj)) / gn + 1.0;
  const double t = std::max(2.0 * t_pd + 1.0, t_target);

  DenseSymmetric U(n - j);
  for (int a = 0; a < n - j; ++a) U.set(a, a, t);

  AdversaryCertificate cert;
  cert.A_tilde = complete_with(df, U);
  cert.v = v;
  cert.b = df.b();
  cert.indist_degree = j;
  cert.residual = norm(subtract(cert.b, cert.A_tilde.apply(v)));
  return cert;
}

// ---------------------------------------------------------------------------
// reflector twins and the projection verdict
// ---------------------------------------------------------------------------

/// Twin matrix A_hat = H A H for the reflector H that reverses the component
/// of y orthogonal to K^{j+1}. A_hat produces the same Krylov information as
/// A through degree j yet acts differently on y; the three recorded norms
/// witness the averaging identity behind the projection argument.
struct TwinCertificate {
  std::optional<Reflector> H;  // nullopt: y was already in K^{j+1}, H = identity
  DenseSymmetric A_hat;
  Vector y, z, w;
  Vector b;
  std::array<double, 3> norms{};  // ||b - A_hat y||, ||b - A y||, ||b - A z||
  int j = 0;

  TwinCertificate() : A_hat(1) {}
};

inline TwinCertificate reflect_twin(const LinearOperator& A, const Vector& b, int j,
                                    const Vector& y, double w_tol = 1e-13) {
  if (j + 1 > A.dim()) throw std::invalid_argument("reflect_twin: j + 1 exceeds the dimension");
  if (!A.oracle_view()) throw std::invalid_argument("reflect_twin: oracle view required");
  const DenseSymmetric& D = *A.oracle_view();

  const auto f = lanczos_factorize(A, b, j + 1);
  TwinCertificate out;
  out.j = j;
  out.b = normalized(b);
  out.y = y;
  out.z = zeros(A.dim());
  for (const Vector& q : f.Q) axpy(dot(q, y), q, out.z);
  out.w = subtract(y, out.z);

  if (norm(out.w) <= w_tol * std::max(norm(y), 1.0)) {
    out.w = zeros(A.dim());
    out.z = y;
    out.A_hat = D;
  } else {
    out.H = Reflector(out.w);
    out.A_hat = out.H->conjugate(D);
  }
  out.norms[0] = norm(subtract(out.b, out.A_hat.apply(out.y)));
  out.norms[1] = norm(subtract(out.b, D.apply(out.y)));
  out.norms[2] = norm(subtract(out.b, D.apply(out.z)));
  return out;
}

struct LemmaVerdict {
  bool hypotheses_hold = false;
  bool ok = false;
  double res_y = 0.0;     // ||b - A y||
  double res_twin = 0.0;  // ||b - A_hat y||
  double res_z = 0.0;     // ||b - A z||
  double bound = 0.0;     // eps ||b|| + slack
};

/// Checks that whenever y achieves an eps-residual for the operator and its
/// reflector twin (the binding indistinguishable matrix), the orthogonal
/// projection z of y onto K^{j+1} achieves it too. An unsatisfied hypothesis
/// is reported, not asserted.
inline LemmaVerdict projection_lemma_check(const LinearOperator& A, const Vector& b, int j,
                                           double eps, const Vector& y, double slack = 1e-10) {
  const auto twin = reflect_twin(A, b, j, y);
  LemmaVerdict v;
  v.res_twin = twin.norms[0];
  v.res_y = twin.norms[1];
  v.res_z = twin.norms[2];
  const double bn = norm(twin.b);
  v.hypotheses_hold = (v.res_y <= eps * bn) && (v.res_twin <= eps * bn);
  v.bound = eps * bn + slack;
  v.ok = v.hypotheses_hold && (v.res_z <= v.bound);
  return v;
}

// ---------------------------------------------------------------------------
// worst-start search
// ---------------------------------------------------------------------------

struct WorstStartResult {
  Vector b_star;
  double value = 0.0;     // step-j subspace-minimal eigenpair residual at b_star
  double lower = 0.0;     // ||A|| / (2j)
  double upper = 0.0;     // ||A|| / j
};

/// Random-restart hill climb maximizing the step-j minimal eigenpair residual
/// over unit start vectors. Heuristic: the budget is the restart count, and
/// the found value is reported against the [||A||/2j, ||A||/j] bracket (the
/// lower end is evidence, not proof).
inline WorstStartResult worst_start_search(const DenseSymmetric& A, int j, int budget,
                                           std::uint64_t seed) {
  const int n = A.order();
  if (j < 1 || j > n) throw std::invalid_argument("worst_start_search: step out of range");
  auto op = LinearOperator::from_dense(A);

  std::uint64_t state = seed;
  auto next_u64 = [&state]() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  auto uniform = [&]() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; };
  auto normal = [&]() {
    double u1 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * uniform());
  };
  auto random_unit = [&]() {
    Vector v(static_cast<std::size_t>(n));
    for (double& x : v) x = normal();
    return normalized(v);
  };
  auto objective = [&](const Vector& b) {
    const auto f = lanczos_factorize(op, b, j);
    if (f.breakdown && f.j < j) return 0.0;
    return detail::gmr_minimize(f.T.diag, f.T.offdiag, f.beta_next).residual;
  };

  WorstStartResult out;
  const double anorm = spectral_norm(A);
  out.lower = anorm / (2.0 * j);
  out.upper = anorm / j;
  out.b_star = unit_vector(n, 0);
  out.value = 0.0;
  for (int restart = 0; restart < std::max(budget, 1); ++restart) {
    Vector b = random_unit();
    double val = objective(b);
    double step = 0.5;
    for (int it = 0; it < 80; ++it) {
      Vector p = random_unit();
      axpy(-dot(p, b), b, p);
      const double pn = norm(p);
      if (pn == 0.0) continue;
      scale_inplace(p, 1.0 / pn);
      Vector cand = b;
      axpy(step, p, cand);
      cand = normalized(cand);
      const double cval = objective(cand);
      if (cval > val) {
        b = std::move(cand);
        val = cval;
      } else {
        step *= 0.85;
      }
    }
    if (val > out.value) {
      out.value = val;
      out.b_star = b;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// nonsymmetric verification path (Hessenberg analog of the distinguished form)
// ---------------------------------------------------------------------------

struct NonsymmetricFormCheck {
  std::vector<Vector> basis;      // n orthonormal columns, first j span K^j
  std::vector<Vector> projected;  // W^t A W, row-major
  double beta = 0.0;              // (j, j-1) coupling below the Hessenberg block
  double max_off_pattern = 0.0;   // largest entry violating the E-block sparsity
  int j = 0;
};

/// Arnoldi-based distinguished basis for a general (possibly nonsymmetric)
/// matrix given as dense rows: the leading j columns of W^t A W form an upper
/// Hessenberg block and the lower-left block vanishes except for beta in its
/// top-right corner. Dense verification only, not a solver path.
inline NonsymmetricFormCheck nonsymmetric_distinguished_form(const std::vector<Vector>& rows,
                                                             const Vector& b, int j) {
  const int n = static_cast<int>(rows.size());
  if (j < 1 || j >= n) throw std::invalid_argument("nonsymmetric_distinguished_form: need 1 <= j < n");
  auto mul = [&](const Vector& v) {
    Vector y(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < n; ++r) y[static_cast<std::size_t>(r)] = dot(rows[static_cast<std::size_t>(r)], v);
    return y;
  };
  // Arnoldi with a reorthogonalization pass
  std::vector<Vector> Q{normalized(b)};
  for (int k = 0; k < j; ++k) {
    Vector w = mul(Q.back());
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : Q) axpy(-dot(q, w), q, w);
    const double h = norm(w);
    if (h <= 1e-12) throw BreakdownError("nonsymmetric_distinguished_form: Krylov space degenerates");
    Q.push_back(scaled(w, 1.0 / h));
  }
  NonsymmetricFormCheck out;
  out.j = j;
  std::vector<Vector> fill = Q;
  for (int k = 0; k < n; ++k) fill.push_back(unit_vector(n, k));
  const auto full = orthonormalize(fill);
  if (full.rank != n) throw std::runtime_error("nonsymmetric_distinguished_form: completion failed");
  out.basis = full.basis;

  out.projected.assign(static_cast<std::size_t>(n), Vector(static_cast<std::size_t>(n), 0.0));
  for (int c = 0; c < n; ++c) {
    const Vector Ac = mul(out.basis[static_cast<std::size_t>(c)]);
    for (int r = 0; r < n; ++r)
      out.projected[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] =
          dot(out.basis[static_cast<std::size_t>(r)], Ac);
  }
  out.beta = out.projected[static_cast<std::size_t>(j)][static_cast<std::size_t>(j - 1)];
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < j; ++c) {
      const bool hessenberg = (r <= c + 1 && r < j) || (r == j && c == j - 1);
      if (!hessenberg)
        out.max_off_pattern = std::max(
            out.max_off_pattern,
            std::abs(out.projected[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
    }
  return out;
}

// ---------------------------------------------------------------------------
// plain-text certificate records (matrix entries row-major, 17 significant
// digits), regression-fixture format
// ---------------------------------------------------------------------------

namespace detail {

inline void write_vector(std::ostream& os, const char* tag, const Vector& v) {
  os << tag;
  char buf[64];
  for (double x : v) {
    std::snprintf(buf, sizeof(buf), " %.17g", x);
    os << buf;
  }
  os << '\n';
}

inline void write_dense(std::ostream& os, const char* tag, const DenseSymmetric& A) {
  os << tag << '\n';
  char buf[64];
  for (int i = 0; i < A.order(); ++i) {
    for (int j = 0; j < A.order(); ++j) {
      std::snprintf(buf, sizeof(buf), "%s%.17g", j ? " " : "", A(i, j));
      os << buf;
    }
    os << '\n';
  }
}

inline Vector read_tagged_vector(std::istream& is, const std::string& tag, int n) {
  std::string got;
  is >> got;
  if (got != tag) throw std::runtime_error("certificate parse: expected " + tag);
  Vector v(static_cast<std::size_t>(n));
  for (double& x : v)
    if (!(is >> x)) throw std::runtime_error("certificate parse: bad vector under " + tag);
  return v;
}

inline DenseSymmetric read_tagged_dense(std::istream& is, const std::string& tag, int n) {
  std::string got;
  is >> got;
  if (got != tag) throw std::runtime_error("certificate parse: expected " + tag);
  std::vector<Vector> rows(static_cast<std::size_t>(n), Vector(static_cast<std::size_t>(n)));
  for (auto& row : rows)
    for (double& x : row)
      if (!(is >> x)) throw std::runtime_error("certificate parse: bad matrix under " + tag);
  return DenseSymmetric::from_rows(rows, 1e-9);
}

}  // namespace detail

inline void write_certificate(std::ostream& os, const AdversaryCertificate& c) {
  os << "kry-adversary-certificate v1\n";
  os << "n " << c.A_tilde.order() << " j " << c.indist_degree << '\n';
  char buf[64];
  std::snprintf(buf, sizeof(buf), "residual %.17g", c.residual);
  os << buf << '\n';
  detail::write_vector(os, "b", c.b);
  detail::write_vector(os, "v", c.v);
  detail::write_dense(os, "A_tilde", c.A_tilde);
}

inline AdversaryCertificate read_certificate(std::istream& is) {
  std::string header, version;
  is >> header >> version;
  if (header != "kry-adversary-certificate" || version != "v1")
    throw std::runtime_error("certificate parse: bad header");
  std::string key;
  int n = 0, j = 0;
  is >> key >> n;
  if (key != "n") throw std::runtime_error("certificate parse: expected n");
  is >> key >> j;
  if (key != "j") throw std::runtime_error("certificate parse: expected j");
  AdversaryCertificate c;
  c.indist_degree = j;
  is >> key >> c.residual;
  if (key != "residual") throw std::runtime_error("certificate parse: expected residual");
  c.b = detail::read_tagged_vector(is, "b", n);
  c.v = detail::read_tagged_vector(is, "v", n);
  c.A_tilde = detail::read_tagged_dense(is, "A_tilde", n);
  return c;
}

inline void write_certificate(std::ostream& os, const TwinCertificate& c) {
  os << "kry-twin-certificate v1\n";
  os << "n " << c.A_hat.order() << " j " << c.j << '\n';
  char buf[200];
  std::snprintf(buf, sizeof(buf), "norms %.17g %.17g %.17g", c.norms[0], c.norms[1], c.norms[2]);
  os << buf << '\n';
  if (c.H)
    detail::write_vector(os, "axis", c.H->axis());
  else
    os << "axis identity\n";
  detail::write_vector(os, "b", c.b);
  detail::write_vector(os, "y", c.y);
  detail::write_vector(os, "z", c.z);
  detail::write_vector(os, "w", c.w);
  detail::write_dense(os, "A_hat", c.A_hat);
}

inline TwinCertificate read_twin_certificate(std::istream& is) {
  std::string header, version;
  is >> header >> version;
  if (header != "kry-twin-certificate" || version != "v1")
    throw std::runtime_error("certificate parse: bad header");
  std::string key;
  int n = 0, j = 0;
  is >> key >> n;
  if (key != "n") throw std::runtime_error("certificate parse: expected n");
  is >> key >> j;
  if (key != "j") throw std::runtime_error("certificate parse: expected j");
  TwinCertificate c;
  c.j = j;
  is >> key;
  if (key != "norms") throw std::runtime_error("certificate parse: expected norms");
  is >> c.norms[0] >> c.norms[1] >> c.norms[2];
  is >> key;
  if (key != "axis") throw std::runtime_error("certificate parse: expected axis");
  std::string first;
  is >> first;
  if (first == "identity") {
    c.H = std::nullopt;
  } else {
    Vector axis(static_cast<std::size_t>(n));
    axis[0] = std::stod(first);
    for (int i = 1; i < n; ++i)
      if (!(is >> axis[static_cast<std::size_t>(i)]))
        throw std::runtime_error("certificate parse: bad axis");
    c.H = Reflector(axis);
  }
  c.b = detail::read_tagged_vector(is, "b", n);
  c.y = detail::read_tagged_vector(is, "y", n);
  c.z = detail::read_tagged_vector(is, "z", n);
  c.w = detail::read_tagged_vector(is, "w", n);
  c.A_hat = detail::read_tagged_dense(is, "A_hat", n);
  return c;
}

}  // namespace kry
