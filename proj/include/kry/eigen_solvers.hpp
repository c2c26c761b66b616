#pragma once

// Rayleigh-Ritz machinery on Lanczos factorizations, minimal-residual pair
// selection, the minimal-residual eigenpair solver over the whole Krylov
// subspace, convergence counting against a reference spectrum, and the
// per-step race between the two stopping rules.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kry/detail/projected.hpp"
#include "kry/krylov.hpp"
#include "kry/linalg.hpp"

namespace kry {

struct RitzPair {
  double theta = 0.0;
  Vector z;                    // unit Ritz vector in the ambient space
  double residual_norm = 0.0;  // ||A z - theta z||
};

struct RitzSet {
  std::vector<RitzPair> pairs;  // thetas ascending
  int step = 0;
  bool exact = false;  // breakdown: the pairs are exact to working precision
};

namespace detail {

/// Eigen data of the projected T_j plus coordinate residuals
/// r_i = ||Bbar g_i - theta_i Ebar g_i|| = |beta_next g_i(j)| up to roundoff.
struct ProjectedRitz {
  std::vector<double> thetas;
  std::vector<Vector> g;  // eigenvectors of T_j, unit, ascending thetas
  std::vector<double> residuals;
};

inline ProjectedRitz projected_ritz(const std::vector<double>& alphas,
                                    const std::vector<double>& betas, double beta_next) {
  const SymTridiagonal T(alphas, betas);
  const EigenDecomposition ed = sym_tridiag_eigen(T);
  ProjectedRitz out;
  out.thetas = ed.values;
  out.g = ed.vectors;
  out.residuals.reserve(ed.values.size());
  for (std::size_t i = 0; i < ed.values.size(); ++i)
    out.residuals.push_back(
        projected_residual(alphas, betas, beta_next, ed.values[i], ed.vectors[i]));
  return out;
}

struct GmrOptions {
  int grid_min = 64;
  int grid_per_step = 4;
  int refine_iters = 48;
  int finalists = 3;
  int invit_scan = 2;
  int invit_final = 10;
  int polish_rounds = 6;
};

struct GmrCoordResult {
  std::vector<double> y;  // unit coordinates in the Lanczos basis
  double rho = 0.0;
  double residual = 0.0;
};

inline double rayleigh_quotient(const std::vector<double>& alphas,
                                const std::vector<double>& betas, const std::vector<double>& y) {
  const int j = static_cast<int>(alphas.size());
  double num = 0.0, den = 0.0;
  for (int i = 0; i < j; ++i) {
    double ty = alphas[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
    if (i > 0) ty += betas[static_cast<std::size_t>(i - 1)] * y[static_cast<std::size_t>(i - 1)];
    if (i + 1 < j) ty += betas[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + 1)];
    num += y[static_cast<std::size_t>(i)] * ty;
    den += y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
  }
  return num / den;
}

/// Minimize ||Bbar y - rho Ebar y|| over unit y and real rho. The candidate
/// set always contains every Ritz pair evaluated with the same residual
/// formula, so the result never exceeds the smallest Ritz residual; a warm
/// candidate from a previous step preserves monotonicity across steps.
inline GmrCoordResult gmr_minimize(const std::vector<double>& alphas,
                                   const std::vector<double>& betas, double beta_next,
                                   const std::vector<double>* warm_y = nullptr,
                                   const GmrOptions& opt = {}) {
  const int j = static_cast<int>(alphas.size());
  const ProjectedRitz rs = projected_ritz(alphas, betas, beta_next);

  GmrCoordResult best;
  best.residual = std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<double>& y, double rho) {
    const double r = projected_residual(alphas, betas, beta_next, rho, y);
    if (r < best.residual) {
      best.y = y;
      best.rho = rho;
      best.residual = r;
    }
  };

  for (std::size_t i = 0; i < rs.thetas.size(); ++i) consider(rs.g[i], rs.thetas[i]);
  if (warm_y && static_cast<int>(warm_y->size()) == j) {
    consider(*warm_y, rayleigh_quotient(alphas, betas, *warm_y));
  }

  // rho scan: Ritz values plus a uniform grid over the spectral interval
  const double lo = rs.thetas.front() - std::abs(beta_next);
  const double hi = rs.thetas.back() + std::abs(beta_next);
  const int ngrid = std::max(opt.grid_min, opt.grid_per_step * j);
  std::vector<double> scan = rs.thetas;
  if (hi > lo)
    for (int k = 0; k <= ngrid; ++k) scan.push_back(lo + (hi - lo) * k / ngrid);

  std::vector<std::pair<double, double>> sigma_at;  // (sigma, rho)
  sigma_at.reserve(scan.size());
  for (double rho : scan) {
    const auto ss = smallest_singular(alphas, betas, beta_next, rho, opt.invit_scan);
    sigma_at.emplace_back(ss.sigma, rho);
    consider(ss.y, rho);
    consider(ss.y, rayleigh_quotient(alphas, betas, ss.y));
  }
  std::sort(sigma_at.begin(), sigma_at.end());

  // golden-section refinement around a few separated scan minima
  const double h = (hi > lo) ? (hi - lo) / ngrid : std::max(std::abs(beta_next), 1e-8);
  std::vector<double> chosen;
  const double golden = 0.6180339887498949;
  for (const auto& [sig, rho0] : sigma_at) {
    if (static_cast<int>(chosen.size()) >= opt.finalists) break;
    bool near = false;
    for (double c : chosen) near = near || (std::abs(c - rho0) <= 2.0 * h);
    if (near) continue;
    chosen.push_back(rho0);

    double a = rho0 - h, b = rho0 + h;
    auto phi = [&](double rho) {
      return smallest_singular(alphas, betas, beta_next, rho, opt.invit_scan).sigma;
    };
    double c1 = b - golden * (b - a), c2 = a + golden * (b - a);
    double f1 = phi(c1), f2 = phi(c2);
    for (int it = 0; it < opt.refine_iters; ++it) {
      if (f1 < f2) {
        b = c2;
        c2 = c1;
        f2 = f1;
        c1 = b - golden * (b - a);
        f1 = phi(c1);
      } else {
        a = c1;
        c1 = c2;
        f1 = f2;
        c2 = a + golden * (b - a);
        f2 = phi(c2);
      }
    }
    double rho = 0.5 * (a + b);
    auto ss = smallest_singular(alphas, betas, beta_next, rho, opt.invit_final);
    consider(ss.y, rho);
    for (int round = 0; round < opt.polish_rounds; ++round) {
      rho = rayleigh_quotient(alphas, betas, ss.y);
      ss = smallest_singular(alphas, betas, beta_next, rho, opt.invit_final);
      consider(ss.y, rho);
      consider(ss.y, rayleigh_quotient(alphas, betas, ss.y));
    }
  }

  // normalize the winner
  double ny = 0.0;
  for (double v : best.y) ny += v * v;
  ny = std::sqrt(ny);
  if (ny > 0.0 && std::abs(ny - 1.0) > 1e-15) {
    for (double& v : best.y) v /= ny;
    best.residual = projected_residual(alphas, betas, beta_next, best.rho, best.y);
  }
  return best;
}

}  // namespace detail

/// All j Rayleigh-Ritz pairs of the factorization, thetas ascending. Residual
/// norms come from the projected two-block formula, which the tests verify
/// against direct dense recomputation.
inline RitzSet rayleigh_ritz(const LanczosFactorization& f) {
  if (f.j < 1) throw std::invalid_argument("rayleigh_ritz: factorization has no steps");
  const auto pr = detail::projected_ritz(f.T.diag, f.T.offdiag, f.beta_next);
  RitzSet out;
  out.step = f.j;
  out.exact = f.breakdown;
  out.pairs.reserve(pr.thetas.size());
  for (std::size_t i = 0; i < pr.thetas.size(); ++i) {
    RitzPair p;
    p.theta = pr.thetas[i];
    p.z = expand_in_basis(f, pr.g[i]);
    const double nz = norm(p.z);
    if (nz > 0.0) scale_inplace(p.z, 1.0 / nz);
    p.residual_norm = pr.residuals[i];
    out.pairs.push_back(std::move(p));
  }
  return out;
}

/// Pair with the smallest residual; ties resolve to the smaller theta.
inline const RitzPair& min_residual_pair(const RitzSet& rs) {
  if (rs.pairs.empty()) throw std::invalid_argument("min_residual_pair: empty set");
  const RitzPair* best = &rs.pairs.front();
  for (const RitzPair& p : rs.pairs) {
    if (p.residual_norm < best->residual_norm ||
        (p.residual_norm == best->residual_norm && p.theta < best->theta))
      best = &p;
  }
  return *best;
}

struct GmrResult {
  Vector x;        // unit vector in K^j
  double rho = 0.0;
  double residual = 0.0;
  Vector y;        // coordinates of x in the Lanczos basis
};

/// Minimal-residual eigenpair over the whole subspace: unit x in K^j and real
/// rho minimizing ||A x - x rho||. On breakdown the subspace is invariant and
/// the result is an exact eigenpair (residual 0 to working precision).
inline GmrResult gmr_eigenpair(const LanczosFactorization& f,
                               const detail::GmrOptions& opt = {}) {
  if (f.j < 1) throw std::invalid_argument("gmr_eigenpair: factorization has no steps");
  const auto r = detail::gmr_minimize(f.T.diag, f.T.offdiag, f.beta_next, nullptr, opt);
  GmrResult out;
  out.y = r.y;
  out.rho = r.rho;
  out.residual = r.residual;
  out.x = expand_in_basis(f, r.y);
  const double nx = norm(out.x);
  if (nx > 0.0) scale_inplace(out.x, 1.0 / nx);
  return out;
}

/// Per-step counts of Ritz pairs that are "good" at tolerance eps: residual
/// at most eps and theta within eps of a distinct reference eigenvalue
/// (greedy one-to-one matching in ascending-residual order, each reference
/// eigenvalue consumed at most once).
inline std::vector<int> count_good_ritz(const LinearOperator& A, const Vector& b, int max_steps,
                                        double eps, Vector reference_spectrum) {
  std::sort(reference_spectrum.begin(), reference_spectrum.end());
  const int kmax = std::min(max_steps, A.dim());
  const auto f = lanczos_factorize(A, b, kmax);
  std::vector<int> counts;
  counts.reserve(static_cast<std::size_t>(f.j));
  for (int j = 1; j <= f.j; ++j) {
    const std::vector<double> alphas(f.T.diag.begin(), f.T.diag.begin() + j);
    const std::vector<double> betas(f.T.offdiag.begin(), f.T.offdiag.begin() + (j - 1));
    const double bn = (j < f.j) ? f.T.offdiag[static_cast<std::size_t>(j - 1)] : f.beta_next;
    const auto pr = detail::projected_ritz(alphas, betas, bn);

    std::vector<std::size_t> order(pr.thetas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t c) { return pr.residuals[a] < pr.residuals[c]; });
    std::vector<bool> used(reference_spectrum.size(), false);
    int count = 0;
    for (std::size_t oi : order) {
      if (pr.residuals[oi] > eps) break;
      // nearest unused reference eigenvalue
      double bestd = std::numeric_limits<double>::infinity();
      int bestk = -1;
      for (std::size_t k = 0; k < reference_spectrum.size(); ++k) {
        if (used[k]) continue;
        const double dist = std::abs(reference_spectrum[k] - pr.thetas[oi]);
        if (dist < bestd) {
          bestd = dist;
          bestk = static_cast<int>(k);
        }
      }
      if (bestk >= 0 && bestd <= eps) {
        used[static_cast<std::size_t>(bestk)] = true;
        ++count;
      }
    }
    counts.push_back(count);
  }
  return counts;
}

/// Overload that takes the reference spectrum from the dense oracle view.
inline std::vector<int> count_good_ritz(const LinearOperator& A, const Vector& b, int max_steps,
                                        double eps) {
  if (!A.oracle_view()) throw std::invalid_argument("count_good_ritz: oracle view required");
  return count_good_ritz(A, b, max_steps, eps, sym_eigen(*A.oracle_view()).values);
}

/// Residual histories of the two stopping rules plus first-passage steps for
/// each tolerance in eps_list. gmr_residuals are clamped to be non-increasing
/// (the previous minimizer, zero-padded, reproduces its objective value
/// exactly at the next step, so the clamp only removes last-ulp jitter).
struct EigRunTrace {
  std::vector<double> lanczos_residuals;  // min Ritz residual per step
  std::vector<double> gmr_residuals;      // subspace minimal residual per step
  std::vector<double> eps_list;
  std::vector<std::optional<int>> lanczos_stops;
  std::vector<std::optional<int>> gmr_stops;
  int steps = 0;
  bool breakdown = false;
};

inline EigRunTrace eig_race(const LinearOperator& A, const Vector& b,
                            const std::vector<double>& eps_list, int max_steps,
                            const detail::GmrOptions& opt = {}) {
  const int kmax = std::min(max_steps, A.dim());
  if (kmax < 1) throw std::invalid_argument("eig_race: max_steps must be positive");
  const auto f = lanczos_factorize(A, b, kmax);

  EigRunTrace tr;
  tr.eps_list = eps_list;
  tr.breakdown = f.breakdown && f.j < kmax;
  tr.steps = f.j;
  tr.lanczos_stops.assign(eps_list.size(), std::nullopt);
  tr.gmr_stops.assign(eps_list.size(), std::nullopt);

  std::vector<double> warm;
  double prev_g = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= f.j; ++j) {
    const std::vector<double> alphas(f.T.diag.begin(), f.T.diag.begin() + j);
    const std::vector<double> betas(f.T.offdiag.begin(), f.T.offdiag.begin() + (j - 1));
    const double bn = (j < f.j) ? f.T.offdiag[static_cast<std::size_t>(j - 1)] : f.beta_next;

    const auto pr = detail::projected_ritz(alphas, betas, bn);
    const double rl = *std::min_element(pr.residuals.begin(), pr.residuals.end());

    std::vector<double> warm_padded;
    const std::vector<double>* warm_ptr = nullptr;
    if (!warm.empty()) {
      warm_padded = warm;
      warm_padded.resize(static_cast<std::size_t>(j), 0.0);
      warm_ptr = &warm_padded;
    }
    auto g = detail::gmr_minimize(alphas, betas, bn, warm_ptr, opt);
    const double rg = std::min(g.residual, prev_g);
    prev_g = rg;
    warm = g.y;

    tr.lanczos_residuals.push_back(rl);
    tr.gmr_residuals.push_back(rg);
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
      if (!tr.lanczos_stops[e] && rl <= eps_list[e]) tr.lanczos_stops[e] = j;
      if (!tr.gmr_stops[e] && rg <= eps_list[e]) tr.gmr_stops[e] = j;
    }
  }
  return tr;
}

}  // namespace kry
