#pragma once

// Krylov information and its orthonormalized Lanczos form. The operator is
// matrix-free: only matrix-vector application is exposed, with an optional
// dense oracle view for tests and verification paths. Every application is
// counted so the j-units cost model is assertable.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>

#include "kry/linalg.hpp"

namespace kry {

namespace tol {
inline constexpr double unit_norm = 1e-12;       // |1 - ||b||| bound for start vectors
inline constexpr double lanczos_breakdown = 1e-12;  // times the running operator scale
}  // namespace tol

class LinearOperator {
 public:
  using ApplyFn = std::function<Vector(const Vector&)>;

  LinearOperator(int dim, ApplyFn fn, std::optional<DenseSymmetric> oracle = std::nullopt)
      : n_(dim),
        fn_(std::move(fn)),
        oracle_(std::move(oracle)),
        count_(std::make_shared<std::atomic<std::uint64_t>>(0)) {
    if (n_ <= 0) throw std::invalid_argument("LinearOperator: dimension must be positive");
  }

  static LinearOperator from_dense(DenseSymmetric A) {
    const int n = A.order();
    auto shared = std::make_shared<DenseSymmetric>(std::move(A));
    return LinearOperator(
        n, [shared](const Vector& v) { return shared->apply(v); }, *shared);
  }

  static LinearOperator from_tridiagonal(SymTridiagonal T, bool attach_oracle = true) {
    const int n = T.order();
    std::optional<DenseSymmetric> oracle;
    if (attach_oracle) oracle = T.to_dense();
    auto shared = std::make_shared<SymTridiagonal>(std::move(T));
    return LinearOperator(
        n, [shared](const Vector& v) { return shared->apply(v); }, std::move(oracle));
  }

  int dim() const { return n_; }

  Vector operator()(const Vector& v) const {
    if (static_cast<int>(v.size()) != n_)
      throw std::invalid_argument("LinearOperator: dimension mismatch");
    count_->fetch_add(1, std::memory_order_relaxed);
    return fn_(v);
  }

  std::uint64_t applications() const { return count_->load(std::memory_order_relaxed); }
  void reset_applications() const { count_->store(0, std::memory_order_relaxed); }

  const std::optional<DenseSymmetric>& oracle_view() const { return oracle_; }

  /// Sampled check that <Av,u> = <v,Au>; throws on violation. Consumes and
  /// then restores the application counter.
  void check_symmetric_action(std::uint64_t seed, int samples = 4, double tl = 1e-10) const {
    const std::uint64_t before = applications();
    std::uint64_t s = seed;
    auto next = [&s]() {
      std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
    };
    for (int t = 0; t < samples; ++t) {
      Vector u(static_cast<std::size_t>(n_)), v(static_cast<std::size_t>(n_));
      for (auto& x : u) x = static_cast<double>(next() >> 11) * 0x1.0p-53 - 0.5;
      for (auto& x : v) x = static_cast<double>(next() >> 11) * 0x1.0p-53 - 0.5;
      const Vector Au = (*this)(u);
      const Vector Av = (*this)(v);
      const double lhs = dot(Av, u);
      const double rhs = dot(v, Au);
      const double sc = std::max({std::abs(lhs), std::abs(rhs), 1.0});
      if (std::abs(lhs - rhs) > tl * sc)
        throw std::runtime_error("LinearOperator: action is not symmetric");
    }
    count_->store(before, std::memory_order_relaxed);
  }

 private:
  int n_;
  ApplyFn fn_;
  std::optional<DenseSymmetric> oracle_;
  std::shared_ptr<std::atomic<std::uint64_t>> count_;
};

// ---------------------------------------------------------------------------
// Krylov information N_j = {b, Ab, ..., A^j b}
// ---------------------------------------------------------------------------

struct KrylovInfo {
  Vector b;
  std::vector<Vector> powers;  // powers[i] = A^i b, i = 0..j
  int j = 0;
};

/// Costs exactly j operator applications; requires a unit start vector.
inline KrylovInfo krylov_info(const LinearOperator& A, const Vector& b, int j,
                              double unit_tol = tol::unit_norm) {
  if (j < 0 || j > A.dim()) throw std::invalid_argument("krylov_info: step count out of range");
  if (std::abs(norm(b) - 1.0) > unit_tol)
    throw std::invalid_argument("krylov_info: start vector must have unit norm");
  KrylovInfo info;
  info.b = b;
  info.j = j;
  info.powers.reserve(static_cast<std::size_t>(j) + 1);
  info.powers.push_back(b);
  for (int i = 0; i < j; ++i) info.powers.push_back(A(info.powers.back()));
  return info;
}

// ---------------------------------------------------------------------------
// Lanczos factorization
// ---------------------------------------------------------------------------

/// A Q = Q T + beta_next q_next e_j^t with Q^t Q = I. beta_next >= 0 always;
/// the sign is absorbed into q_next. breakdown means beta collapsed (an exact
/// invariant subspace), in which case j may be smaller than requested and
/// q_next is empty.
struct LanczosFactorization {
  std::vector<Vector> Q;  // q_1..q_j, orthonormal
  SymTridiagonal T;       // j x j projection
  double beta_next = 0.0;
  Vector q_next;          // empty when breakdown
  int j = 0;
  bool breakdown = false;
  int requested = 0;

  int dim() const { return Q.empty() ? 0 : static_cast<int>(Q.front().size()); }
};

/// Lanczos with full reorthogonalization (two passes against all previous
/// basis vectors). Costs exactly the achieved number of steps in operator
/// applications. Breakdown is a flagged success, not an error.
inline LanczosFactorization lanczos_factorize(const LinearOperator& A, const Vector& b, int j,
                                              double breakdown_tol = tol::lanczos_breakdown,
                                              double unit_tol = tol::unit_norm) {
  if (j < 1 || j > A.dim()) throw std::invalid_argument("lanczos_factorize: step count out of range");
  if (std::abs(norm(b) - 1.0) > unit_tol)
    throw std::invalid_argument("lanczos_factorize: start vector must have unit norm");

  LanczosFactorization f;
  f.requested = j;
  f.Q.push_back(normalized(b));
  Vector alphas, betas;
  double scale = 0.0;

  for (int i = 0; i < j; ++i) {
    Vector w = A(f.Q[static_cast<std::size_t>(i)]);
    scale = std::max(scale, norm(w));
    const double alpha = dot(f.Q[static_cast<std::size_t>(i)], w);
    alphas.push_back(alpha);
    axpy(-alpha, f.Q[static_cast<std::size_t>(i)], w);
    if (i > 0) axpy(-betas.back(), f.Q[static_cast<std::size_t>(i - 1)], w);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& q : f.Q) axpy(-dot(q, w), q, w);
    const double beta = norm(w);
    f.j = i + 1;
    if (beta <= breakdown_tol * std::max(scale, 1.0)) {
      f.breakdown = true;
      f.beta_next = 0.0;
      f.q_next.clear();
      break;
    }
    f.beta_next = beta;
    f.q_next = scaled(w, 1.0 / beta);
    if (i + 1 < j) {
      betas.push_back(beta);
      f.Q.push_back(f.q_next);
    }
  }
  f.T = SymTridiagonal(std::move(alphas), std::move(betas));
  if (f.j == A.dim()) {
    // full space: K^{n+1} = K^n, so the trailing coupling is spurious
    f.breakdown = true;
    f.beta_next = 0.0;
    f.q_next.clear();
  }
  return f;
}

/// Linear combination Q * coeffs (free under the cost model).
inline Vector expand_in_basis(const LanczosFactorization& f, const Vector& coeffs) {
  if (static_cast<int>(coeffs.size()) > f.j)
    throw std::invalid_argument("expand_in_basis: coefficient count exceeds step");
  Vector x = zeros(f.dim());
  for (std::size_t i = 0; i < coeffs.size(); ++i) axpy(coeffs[i], f.Q[i], x);
  return x;
}

}  // namespace kry
