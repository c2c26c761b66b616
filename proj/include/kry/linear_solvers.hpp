#pragma once

// Krylov-information algorithms for A x = b: the minimal-residual step, the
// Galerkin (conjugate-gradient) step, Chebyshev semi-iteration for operators
// with spectrum in [1-rho, 1+rho], the q(eps) step predictor, and the
// generalized p-residual verification oracle.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kry/detail/projected.hpp"
#include "kry/krylov.hpp"
#include "kry/linalg.hpp"

namespace kry {

struct ToleranceSpec {
  double epsilon = 0.0;  // in [0, 1)
  double p = 1.0;        // one of {0, 1/2, 1}
};

struct ChebyshevParams {
  double rho = 0.5;  // spectrum enclosure half-width, in (0, 1)
};

/// Iterate/residual history of a linear solve. iterates[k] is the (k+1)-st
/// iterate x_{k+1} in K^{k+1}. stop_step is the first iterate index whose
/// residual meets the tolerance. info_stop counts the operator applications
/// (Krylov information units) a recurrence-based implementation needs before
/// that iterate's coefficients are known: for the Chebyshev recurrence x_k
/// is a free combination of {b,...,A^{k-1}b}, so info_stop = stop_step - 1;
/// a minimal-residual step j consumes all of {b,...,A^j b}, so there
/// info_stop = stop_step.
struct SolveTrace {
  std::vector<Vector> iterates;
  std::vector<double> residual_norms;
  std::optional<int> stop_step;
  std::optional<int> info_stop;
};

class SingularProjection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minimizer of ||b - A v|| over v in K^j, computed from the step-j
/// factorization (which consumed N_j: the trailing coupling beta_j, q_{j+1}
/// is exactly the extra information A^j b provides).
inline Vector mr_step(const LanczosFactorization& f, const Vector& b) {
  if (f.j < 1) throw std::invalid_argument("mr_step: factorization has no steps");
  if (norm(subtract(normalized(b), f.Q.front())) > 1e-8)
    throw std::invalid_argument("mr_step: b does not match the factorization start vector");
  const auto R = detail::band_qr(f.T.diag, f.T.offdiag, f.beta_next, 0.0, true);
  const double scale = detail::projected_scale(f.T.diag, f.T.offdiag, f.beta_next, 0.0);
  std::vector<double> head(R.g.begin(), R.g.end() - 1);
  const std::vector<double> y = detail::band_back_solve(R, head, scale * 1e-18);
  return expand_in_basis(f, y);
}

/// Galerkin step: x in K^j with Q^t (b - A x) = 0; for SPD operators this is
/// the conjugate-gradient iterate. Throws SingularProjection when T_j is
/// numerically singular (possible only without positive definiteness).
inline Vector cg_step(const LanczosFactorization& f, const Vector& b) {
  if (f.j < 1) throw std::invalid_argument("cg_step: factorization has no steps");
  if (norm(subtract(normalized(b), f.Q.front())) > 1e-8)
    throw std::invalid_argument("cg_step: b does not match the factorization start vector");
  const EigenDecomposition ed = sym_tridiag_eigen(f.T);
  const double lmax = std::max(std::abs(ed.values.front()), std::abs(ed.values.back()));
  Vector y = zeros(f.j);
  for (std::size_t k = 0; k < ed.values.size(); ++k) {
    if (std::abs(ed.values[k]) <= 1e-13 * std::max(lmax, 1.0))
      throw SingularProjection("cg_step: projected matrix T_j is singular");
    // rhs is e_1 in the Lanczos basis
    axpy(ed.vectors[k][0] / ed.values[k], ed.vectors[k], y);
  }
  return expand_in_basis(f, y);
}

/// floor( ln((1+sqrt(1-eps^2))/eps) / ln((1+sqrt(1-rho^2))/rho) ), evaluated
/// in extended precision.
inline int q_epsilon(double eps, double rho) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("q_epsilon: eps must lie in (0,1)");
  if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("q_epsilon: rho must lie in (0,1)");
  const long double le = static_cast<long double>(eps);
  const long double lr = static_cast<long double>(rho);
  const long double num = std::log((1.0L + std::sqrt(1.0L - le * le)) / le);
  const long double den = std::log((1.0L + std::sqrt(1.0L - lr * lr)) / lr);
  return static_cast<int>(std::floor(num / den));
}

/// Chebyshev semi-iteration for spectrum(A) in [1-rho, 1+rho]. The k-th
/// iterate carries the residual polynomial C_k((1-t)/rho)/C_k(1/rho); the
/// recurrence below tracks the ratios gamma_{k-1}/gamma_k of the Chebyshev
/// values so no quantity overflows:
///   x_1     = b
///   x_{k+1} = z_k (x_k + r_k) - w_k x_{k-1},
///   z_k     = 2/(2 - rho t_k),  w_k = z_k - 1,  t_{k+1} = rho/(2 - rho t_k),
/// with t_1 = rho and r_k = b - A x_k.
inline SolveTrace chebyshev_run(const LinearOperator& A, const Vector& b,
                                const ChebyshevParams& params, double eps, int max_steps) {
  if (!(params.rho > 0.0 && params.rho < 1.0))
    throw std::domain_error("chebyshev_run: rho must lie in (0,1)");
  if (max_steps < 1) throw std::invalid_argument("chebyshev_run: max_steps must be positive");
  const double rho = params.rho;
  const double bn = norm(b);

  SolveTrace trace;
  Vector x_prev = zeros(A.dim());
  Vector x = b;  // x_1
  double t = rho;
  for (int k = 1; k <= max_steps; ++k) {
    Vector r = subtract(b, A(x));
    trace.iterates.push_back(x);
    trace.residual_norms.push_back(norm(r));
    if (!trace.stop_step && trace.residual_norms.back() <= eps * bn) {
      trace.stop_step = k;
      trace.info_stop = k - 1;
      break;
    }
    const double z = 2.0 / (2.0 - rho * t);
    const double w = z - 1.0;
    Vector x_next = add(x, r);
    scale_inplace(x_next, z);
    axpy(-w, x_prev, x_next);
    x_prev = std::move(x);
    x = std::move(x_next);
    t = rho / (2.0 - rho * t);
  }
  return trace;
}

struct GeneralizedResidual {
  double lhs = 0.0;        // ||A^p (x - A^{-1} b)||
  double companion = 0.0;  // ||A^{p-1} b||
};

/// Verification oracle for the generalized p-residual. Computed through the
/// dense eigendecomposition of the oracle view; for p not in {0,1} the
/// quantity is not available to matrix-free algorithms, which is exactly why
/// it lives behind the oracle.
inline GeneralizedResidual generalized_residual(const LinearOperator& A, const Vector& x,
                                                const Vector& b, double p) {
  if (!A.oracle_view()) throw std::invalid_argument("generalized_residual: oracle view required");
  const DenseSymmetric& D = *A.oracle_view();
  const EigenDecomposition ed = sym_eigen(D);
  const double lmax = std::max(std::abs(ed.values.front()), std::abs(ed.values.back()));
  const bool integral = (p == 0.0 || p == 1.0);
  for (double lam : ed.values) {
    if (std::abs(lam) <= 1e-13 * std::max(lmax, 1.0))
      throw std::domain_error("generalized_residual: singular matrix");
    if (!integral && lam <= 0.0)
      throw std::domain_error("generalized_residual: fractional p requires positive definiteness");
  }
  GeneralizedResidual out;
  double lhs2 = 0.0, comp2 = 0.0;
  for (std::size_t k = 0; k < ed.values.size(); ++k) {
    const double lam = ed.values[k];
    const double cb = dot(ed.vectors[k], b);
    const double cx = dot(ed.vectors[k], x);
    const double err = cx - cb / lam;  // component of x - A^{-1} b
    const double lp = std::pow(lam, p);
    lhs2 += lp * err * lp * err;
    const double lq = std::pow(lam, p - 1.0);
    comp2 += lq * cb * lq * cb;
  }
  out.lhs = std::sqrt(lhs2);
  out.companion = std::sqrt(comp2);
  return out;
}

}  // namespace kry
