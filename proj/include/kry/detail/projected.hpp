#pragma once

// Kernels on the projected matrix Bbar = [T_j ; beta_next e_j^t] that the
// Lanczos factorization produces: Givens QR of the shifted matrix
// M(rho) = Bbar - rho*Ebar (Ebar = identity padded with a zero row), the
// small least-squares solve behind the minimal-residual step, and inverse
// iteration for the smallest singular pair. All O(j) per call.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace kry::detail {

struct BandR {
  std::vector<double> d;   // diagonal of R
  std::vector<double> s;   // first superdiagonal
  std::vector<double> t;   // second superdiagonal
  std::vector<double> g;   // rotated right-hand side (j+1 entries) when requested
};

/// Givens QR of [T - rho I ; beta_next e_j^t]. alphas/betas describe T (j and
/// j-1 entries); rhs_e1, when true, carries e_1 through the rotations.
inline BandR band_qr(const std::vector<double>& alphas, const std::vector<double>& betas,
                     double beta_next, double rho, bool rhs_e1 = false) {
  const int j = static_cast<int>(alphas.size());
  BandR R;
  R.d.assign(static_cast<std::size_t>(j), 0.0);
  R.s.assign(static_cast<std::size_t>(j), 0.0);
  R.t.assign(static_cast<std::size_t>(j), 0.0);
  if (rhs_e1) {
    R.g.assign(static_cast<std::size_t>(j) + 1, 0.0);
    R.g[0] = 1.0;
  }
  auto beta_at = [&](int i) { return (i >= 0 && i < j - 1) ? betas[static_cast<std::size_t>(i)] : 0.0; };

  double dhat = alphas.empty() ? 0.0 : alphas[0] - rho;
  double shat = beta_at(0);
  for (int i = 0; i < j; ++i) {
    const bool last = (i == j - 1);
    const double sub = last ? beta_next : betas[static_cast<std::size_t>(i)];
    const double next_d = last ? 0.0 : alphas[static_cast<std::size_t>(i + 1)] - rho;
    const double next_s = last ? 0.0 : beta_at(i + 1);
    const double r = std::hypot(dhat, sub);
    double c = 1.0, s = 0.0;
    if (r != 0.0) {
      c = dhat / r;
      s = sub / r;
    }
    R.d[static_cast<std::size_t>(i)] = r;
    if (!last) {
      R.s[static_cast<std::size_t>(i)] = c * shat + s * next_d;
      R.t[static_cast<std::size_t>(i)] = s * next_s;
      dhat = -s * shat + c * next_d;
      shat = c * next_s;
    }
    if (rhs_e1) {
      const double gi = R.g[static_cast<std::size_t>(i)];
      const double gi1 = R.g[static_cast<std::size_t>(i + 1)];
      R.g[static_cast<std::size_t>(i)] = c * gi + s * gi1;
      R.g[static_cast<std::size_t>(i + 1)] = -s * gi + c * gi1;
    }
  }
  return R;
}

inline double projected_scale(const std::vector<double>& alphas, const std::vector<double>& betas,
                              double beta_next, double rho) {
  double m = std::abs(beta_next) + std::abs(rho);
  for (double a : alphas) m = std::max(m, std::abs(a));
  for (double b : betas) m = std::max(m, std::abs(b));
  return std::max(m, 1e-30);
}

inline double guarded(double piv, double floor_val) {
  if (std::abs(piv) >= floor_val) return piv;
  return piv >= 0.0 ? floor_val : -floor_val;
}

/// Solve R y = rhs (R upper triangular, bandwidth 2).
inline std::vector<double> band_back_solve(const BandR& R, const std::vector<double>& rhs,
                                           double piv_floor) {
  const int j = static_cast<int>(R.d.size());
  std::vector<double> y(static_cast<std::size_t>(j), 0.0);
  for (int i = j - 1; i >= 0; --i) {
    double v = rhs[static_cast<std::size_t>(i)];
    if (i + 1 < j) v -= R.s[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + 1)];
    if (i + 2 < j) v -= R.t[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + 2)];
    y[static_cast<std::size_t>(i)] = v / guarded(R.d[static_cast<std::size_t>(i)], piv_floor);
  }
  return y;
}

/// Solve R^t u = rhs (forward substitution on the band).
inline std::vector<double> band_forward_solve(const BandR& R, const std::vector<double>& rhs,
                                              double piv_floor) {
  const int j = static_cast<int>(R.d.size());
  std::vector<double> u(static_cast<std::size_t>(j), 0.0);
  for (int i = 0; i < j; ++i) {
    double v = rhs[static_cast<std::size_t>(i)];
    if (i - 1 >= 0) v -= R.s[static_cast<std::size_t>(i - 1)] * u[static_cast<std::size_t>(i - 1)];
    if (i - 2 >= 0) v -= R.t[static_cast<std::size_t>(i - 2)] * u[static_cast<std::size_t>(i - 2)];
    u[static_cast<std::size_t>(i)] = v / guarded(R.d[static_cast<std::size_t>(i)], piv_floor);
  }
  return u;
}

/// || M(rho) y ||, M(rho) = [T - rho I ; beta_next e_j^t].
inline double projected_residual(const std::vector<double>& alphas, const std::vector<double>& betas,
                                 double beta_next, double rho, const std::vector<double>& y) {
  const int j = static_cast<int>(alphas.size());
  double acc = 0.0;
  for (int i = 0; i < j; ++i) {
    double v = (alphas[static_cast<std::size_t>(i)] - rho) * y[static_cast<std::size_t>(i)];
    if (i > 0) v += betas[static_cast<std::size_t>(i - 1)] * y[static_cast<std::size_t>(i - 1)];
    if (i + 1 < j) v += betas[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + 1)];
    acc += v * v;
  }
  const double spike = beta_next * y[static_cast<std::size_t>(j - 1)];
  acc += spike * spike;
  return std::sqrt(acc);
}

struct SmallestSingular {
  std::vector<double> y;  // unit right singular vector estimate
  double sigma = 0.0;     // || M(rho) y ||, an achievable residual
};

/// Inverse iteration on (R^t R)^{-1} for the smallest singular pair of
/// M(rho); sigma is evaluated exactly from the returned vector, so the value
/// is always achievable (an upper bound on the true minimum).
inline SmallestSingular smallest_singular(const std::vector<double>& alphas,
                                          const std::vector<double>& betas, double beta_next,
                                          double rho, int iterations = 6) {
  const int j = static_cast<int>(alphas.size());
  const BandR R = band_qr(alphas, betas, beta_next, rho, false);
  const double scale = projected_scale(alphas, betas, beta_next, rho);
  const double piv_floor = scale * std::numeric_limits<double>::epsilon() * 1e-3;

  std::vector<double> y(static_cast<std::size_t>(j));
  for (int i = 0; i < j; ++i)
    y[static_cast<std::size_t>(i)] = 1.0 + 1e-3 * static_cast<double>(i % 7);
  double ny = 0.0;
  for (double v : y) ny += v * v;
  ny = std::sqrt(ny);
  for (double& v : y) v /= ny;

  for (int it = 0; it < iterations; ++it) {
    std::vector<double> u = band_forward_solve(R, y, piv_floor);
    std::vector<double> v = band_back_solve(R, u, piv_floor);
    double nv = 0.0;
    for (double x : v) nv += x * x;
    nv = std::sqrt(nv);
    if (nv == 0.0 || !std::isfinite(nv)) break;
    for (double& x : v) x /= nv;
    y = std::move(v);
  }
  SmallestSingular out;
  out.sigma = projected_residual(alphas, betas, beta_next, rho, y);
  out.y = std::move(y);
  return out;
}

}  // namespace kry::detail
