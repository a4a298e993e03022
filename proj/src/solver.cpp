#include <algorithm>
#include <cmath>

#include "supcert/solver.hpp"

namespace supcert {

namespace {

void check_shapes(const Matrix& phi, const Vector& y) {
  if (phi.rows() != y.size()) throw std::invalid_argument("shape mismatch between phi and y");
  if (!phi.all_finite() || !all_finite(y)) throw std::invalid_argument("non-finite input");
}

double bp_residual(const Vector& x, const Vector& p, const Matrix& phi, const Vector& y) {
  Vector eta = multiply_transpose(phi, p);
  double a = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) a = std::max(a, std::abs(eta[i] - sign_of(x[i])));
  double b = std::max(0.0, norm_linf(eta) - 1.0);
  double feas = norm_linf(sub(multiply(phi, x), y)) / (1.0 + norm_linf(y));
  return std::max({a, b, feas});
}

}  // namespace

namespace {

// The result invariant ties the Optimal status to the measured residual.
void enforce_residual_contract(SolveResult& r, const SolverConfig& cfg) {
  if (r.status == SolveStatus::Optimal && r.kkt_residual > std::max(cfg.tolerance, 1e-9))
    r.status = SolveStatus::MaxIter;
}

}  // namespace

double subdifferential_distance(const Vector& g, const Vector& p, double beta) {
  double pmax = norm_linf(p);
  if (pmax == 0.0) {
    // subdifferential of a norm at zero: the unit ball of the dual norm
    return std::max(0.0, norm_lp(g, holder_conjugate(beta)) - 1.0);
  }
  if (beta == 1.0) {
    double ptol = 1e-9 * std::max(1.0, pmax);
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (std::abs(p[i]) > ptol)
        r = std::max(r, std::abs(g[i] - sign_of(p[i])));
      else
        r = std::max(r, std::abs(g[i]) - 1.0);
    }
    return std::max(0.0, r);
  }
  if (std::isinf(beta)) {
    // face of the simplex spanned by sign(p_i) e_i over the saturation set
    double ztol = 1e-9 * std::max(1.0, pmax);
    double r = 0.0, inner = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (pmax - std::abs(p[i]) <= ztol) {
        inner += g[i] * sign_of(p[i]);
        r = std::max(r, std::max(0.0, -g[i] * sign_of(p[i])));
      } else {
        r = std::max(r, std::abs(g[i]));
      }
    }
    return std::max(r, std::abs(inner - 1.0));
  }
  if (beta == 2.0) {
    double n2 = norm_l2(p);
    double r = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) r = std::max(r, std::abs(g[i] - p[i] / n2));
    return r;
  }
  double nb = norm_lp(p, beta);
  double r = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double grad = sign_of(p[i]) * std::pow(std::abs(p[i]) / nb, beta - 1.0);
    r = std::max(r, std::abs(g[i] - grad));
  }
  return r;
}

double kkt_residual(const Vector& x, const Vector& p, const Matrix& phi, const Vector& y,
                    double alpha, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("kkt_residual: tau must be positive");
  Vector eta = multiply_transpose(phi, p);
  // Entries below the working precision of the solvers do not count as
  // support; first-order iterates park transient coordinates there.
  double xtol = 1e-9 * std::max(1.0, norm_linf(x));
  double a = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) > xtol) a = std::max(a, std::abs(eta[i] - sign_of(x[i])));
  double b = std::max(0.0, norm_linf(eta) - 1.0);
  Vector g = scale(sub(y, multiply(phi, x)), 1.0 / tau);
  double c = subdifferential_distance(g, p, holder_conjugate(alpha));
  return std::max({a, b, c});
}

SolveResult solve_basis_pursuit(const Matrix& phi, const Vector& y, const SolverConfig& cfg) {
  check_shapes(phi, y);
  std::size_t m = phi.rows(), n = phi.cols();
  LpProblem lp;
  lp.a = Matrix(m, 2 * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      lp.a(i, j) = phi(i, j);
      lp.a(i, n + j) = -phi(i, j);
    }
  lp.b = y;
  lp.c = Vector(2 * n, 1.0);

  LpSolution s = solve_lp(lp, cfg);
  SolveResult r;
  r.status = s.status;
  r.iterations = s.iterations;
  if (s.status != SolveStatus::Optimal) return r;
  r.primal.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) r.primal[j] = s.x[j] - s.x[n + j];
  r.objective = norm_l1(r.primal);
  r.dual = s.dual;
  r.kkt_residual = bp_residual(r.primal, s.dual, phi, y);
  enforce_residual_contract(r, cfg);
  return r;
}

namespace {

// |phi x - y|_inf <= tau: one row phi x + s = y + tau per coordinate with a
// ranged slack s in [0, 2 tau].
SolveResult solve_primal_linf_lp(const Matrix& phi, const Vector& y, double tau,
                                 const SolverConfig& cfg) {
  std::size_t m = phi.rows(), n = phi.cols();
  std::size_t nv = 2 * n + m;
  LpProblem lp;
  lp.a = Matrix(m, nv);
  lp.b = Vector(m);
  lp.c = Vector(nv, 0.0);
  lp.upper = Vector(nv, kInf);
  for (std::size_t j = 0; j < 2 * n; ++j) lp.c[j] = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      lp.a(i, j) = phi(i, j);
      lp.a(i, n + j) = -phi(i, j);
    }
    lp.a(i, 2 * n + i) = 1.0;
    lp.b[i] = y[i] + tau;
    lp.upper[2 * n + i] = 2.0 * tau;
  }

  LpSolution s = solve_lp(lp, cfg);
  SolveResult r;
  r.status = s.status;
  r.iterations = s.iterations;
  if (s.status != SolveStatus::Optimal) return r;
  r.primal.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) r.primal[j] = s.x[j] - s.x[n + j];
  r.objective = norm_l1(r.primal);
  r.dual = s.dual;
  r.kkt_residual = kkt_residual(r.primal, s.dual, phi, y, kInf, tau);
  enforce_residual_contract(r, cfg);
  return r;
}

// sum_i |(phi x - y)_i| <= tau with a split residual r+ - r- and a single
// budget row over its total mass.
SolveResult solve_primal_l1_lp(const Matrix& phi, const Vector& y, double tau,
                               const SolverConfig& cfg) {
  std::size_t m = phi.rows(), n = phi.cols();
  std::size_t rp0 = 2 * n, rm0 = 2 * n + m, sc = 2 * n + 2 * m;
  std::size_t nv = 2 * n + 2 * m + 1;
  LpProblem lp;
  lp.a = Matrix(m + 1, nv);
  lp.b = Vector(m + 1);
  lp.c = Vector(nv, 0.0);
  for (std::size_t j = 0; j < 2 * n; ++j) lp.c[j] = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      lp.a(i, j) = phi(i, j);
      lp.a(i, n + j) = -phi(i, j);
    }
    lp.a(i, rp0 + i) = -1.0;  // phi x - r+ + r- = y
    lp.a(i, rm0 + i) = 1.0;
    lp.b[i] = y[i];
    lp.a(m, rp0 + i) = 1.0;
    lp.a(m, rm0 + i) = 1.0;
  }
  lp.a(m, sc) = 1.0;
  lp.b[m] = tau;

  LpSolution s = solve_lp(lp, cfg);
  SolveResult r;
  r.status = s.status;
  r.iterations = s.iterations;
  if (s.status != SolveStatus::Optimal) return r;
  r.primal.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) r.primal[j] = s.x[j] - s.x[n + j];
  r.objective = norm_l1(r.primal);
  Vector p(m);
  for (std::size_t i = 0; i < m; ++i) p[i] = s.dual[i];
  r.dual = p;
  r.kkt_residual = kkt_residual(r.primal, p, phi, y, 1.0, tau);
  enforce_residual_contract(r, cfg);
  return r;
}

}  // namespace

SolveResult solve_primal(const Matrix& phi, const Vector& y, double alpha, double tau,
                         const SolverConfig& cfg) {
  check_shapes(phi, y);
  if (tau < 0.0) throw std::invalid_argument("solve_primal: tau must be nonnegative");
  if (tau == 0.0) return solve_basis_pursuit(phi, y, cfg);
  if (std::isinf(alpha)) return solve_primal_linf_lp(phi, y, tau, cfg);
  if (alpha == 1.0) return solve_primal_l1_lp(phi, y, tau, cfg);
  if (alpha == 2.0) {
    // Feasibility pre-check: the first-order iteration cannot certify an
    // empty constraint set by itself.
    Vector xls = multiply(pseudo_inverse(phi), y);
    if (norm_l2(sub(multiply(phi, xls), y)) > tau * (1.0 + 1e-9) + 1e-12) {
      SolveResult r;
      r.status = SolveStatus::Infeasible;
      return r;
    }
    return solve_primal_first_order(phi, y, 2.0, tau, cfg);
  }
  throw std::invalid_argument("solve_primal: alpha must be 1, 2, or inf");
}

namespace {

SolveResult solve_dual_l1_lp(const Matrix& phi, const Vector& y, double tau,
                             const SolverConfig& cfg) {
  std::size_t m = phi.rows(), n = phi.cols();
  std::size_t nv = 2 * m + n;
  LpProblem lp;
  lp.a = Matrix(n, nv);
  lp.b = Vector(n, 1.0);
  lp.c = Vector(nv, 0.0);
  lp.upper = Vector(nv, kInf);
  for (std::size_t i = 0; i < m; ++i) {
    lp.c[i] = -y[i] + tau;
    lp.c[m + i] = y[i] + tau;
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      lp.a(j, i) = phi(i, j);
      lp.a(j, m + i) = -phi(i, j);
    }
    lp.a(j, 2 * m + j) = 1.0;  // phi^T p + s = 1, s in [0, 2]
    lp.upper[2 * m + j] = 2.0;
  }

  LpSolution s = solve_lp(lp, cfg);
  SolveResult r;
  r.status = s.status;
  r.iterations = s.iterations;
  if (s.status != SolveStatus::Optimal) return r;
  Vector p(m);
  for (std::size_t i = 0; i < m; ++i) p[i] = s.x[i] - s.x[m + i];
  r.primal = p;
  r.objective = -dot(y, p) + tau * norm_l1(p);
  Vector xhat(n);
  for (std::size_t j = 0; j < n; ++j) xhat[j] = -s.dual[j];
  r.dual = xhat;
  if (tau > 0.0) {
    r.kkt_residual = kkt_residual(xhat, p, phi, y, kInf, tau);
  } else {
    r.kkt_residual = bp_residual(xhat, p, phi, y);
  }
  enforce_residual_contract(r, cfg);
  return r;
}

SolveResult solve_dual_linf_lp(const Matrix& phi, const Vector& y, double tau,
                               const SolverConfig& cfg) {
  std::size_t m = phi.rows(), n = phi.cols();
  std::size_t t0 = 2 * m;
  std::size_t nv = 2 * m + 1 + n + m;
  LpProblem lp;
  lp.a = Matrix(n + m, nv);
  lp.b = Vector(n + m, 0.0);
  lp.c = Vector(nv, 0.0);
  lp.upper = Vector(nv, kInf);
  for (std::size_t i = 0; i < m; ++i) {
    lp.c[i] = -y[i];
    lp.c[m + i] = y[i];
  }
  lp.c[t0] = tau;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      lp.a(j, i) = phi(i, j);
      lp.a(j, m + i) = -phi(i, j);
    }
    lp.a(j, t0 + 1 + j) = 1.0;
    lp.b[j] = 1.0;
    lp.upper[t0 + 1 + j] = 2.0;
  }
  for (std::size_t i = 0; i < m; ++i) {
    lp.a(n + i, i) = 1.0;
    lp.a(n + i, m + i) = 1.0;
    lp.a(n + i, t0) = -1.0;
    lp.a(n + i, t0 + 1 + n + i) = 1.0;  // p+ + p- - t + r = 0
  }

  LpSolution s = solve_lp(lp, cfg);
  SolveResult r;
  r.status = s.status;
  r.iterations = s.iterations;
  if (s.status != SolveStatus::Optimal) return r;
  Vector p(m);
  for (std::size_t i = 0; i < m; ++i) p[i] = s.x[i] - s.x[m + i];
  r.primal = p;
  r.objective = -dot(y, p) + tau * norm_linf(p);
  Vector xhat(n);
  for (std::size_t j = 0; j < n; ++j) xhat[j] = -s.dual[j];
  r.dual = xhat;
  if (tau > 0.0) {
    r.kkt_residual = kkt_residual(xhat, p, phi, y, 1.0, tau);
  } else {
    r.kkt_residual = bp_residual(xhat, p, phi, y);
  }
  enforce_residual_contract(r, cfg);
  return r;
}

}  // namespace

SolveResult solve_dual(const Matrix& phi, const Vector& y, double beta, double tau,
                       const SolverConfig& cfg) {
  check_shapes(phi, y);
  if (tau < 0.0) throw std::invalid_argument("solve_dual: tau must be nonnegative");
  if (beta == 1.0) return solve_dual_l1_lp(phi, y, tau, cfg);
  if (std::isinf(beta)) return solve_dual_linf_lp(phi, y, tau, cfg);
  if (beta == 2.0) return solve_dual_first_order(phi, y, 2.0, tau, cfg);
  throw std::invalid_argument("solve_dual: beta must be 1, 2, or inf");
}

namespace {

// Shared frame for the certificate programs: equality rows on the support,
// one ranged box row per off-support column, optional magnitude rows tying
// p to t for the sup-norm objective, and a caller-chosen cost vector.
struct CertificateLpFrame {
  LpProblem lp;
  IndexSet off;
  std::size_t k = 0, f = 0, t_col = 0;
  bool has_t = false;
};

CertificateLpFrame certificate_lp_frame(const Matrix& phi, const IndexSet& support,
                                        const Vector& signs, bool with_t) {
  std::size_t m = phi.rows(), n = phi.cols();
  CertificateLpFrame fr;
  fr.off = complement(support, n);
  fr.k = support.size();
  fr.f = fr.off.size();
  fr.has_t = with_t;
  fr.t_col = 2 * m;
  std::size_t rows = fr.k + fr.f + (with_t ? m : 0);
  std::size_t slack0 = 2 * m + (with_t ? 1 : 0);
  std::size_t nv = slack0 + fr.f + (with_t ? m : 0);

  LpProblem& lp = fr.lp;
  lp.a = Matrix(rows, nv);
  lp.b = Vector(rows, 0.0);
  lp.c = Vector(nv, 0.0);
  lp.upper = Vector(nv, kInf);
  for (std::size_t t = 0; t < fr.k; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      lp.a(t, i) = phi(i, support[t]);
      lp.a(t, m + i) = -phi(i, support[t]);
    }
    lp.b[t] = signs[t];
  }
  for (std::size_t t = 0; t < fr.f; ++t) {
    std::size_t r = fr.k + t;
    for (std::size_t i = 0; i < m; ++i) {
      lp.a(r, i) = phi(i, fr.off[t]);
      lp.a(r, m + i) = -phi(i, fr.off[t]);
    }
    lp.a(r, slack0 + t) = 1.0;  // phi_j^T p + s = 1, s in [0, 2]
    lp.b[r] = 1.0;
    lp.upper[slack0 + t] = 2.0;
  }
  if (with_t) {
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t r = fr.k + fr.f + i;
      lp.a(r, i) = 1.0;
      lp.a(r, m + i) = 1.0;
      lp.a(r, fr.t_col) = -1.0;
      lp.a(r, slack0 + fr.f + i) = 1.0;  // p+ + p- - t + slack = 0
    }
  }
  return fr;
}

}  // namespace

std::optional<Vector> feasible_certificate_point(const Matrix& phi, const IndexSet& support,
                                                 const Vector& signs, const SolverConfig& cfg) {
  std::size_t m = phi.rows();
  CertificateLpFrame fr = certificate_lp_frame(phi, support, signs, false);
  LpSolution s = solve_lp(fr.lp, cfg);
  if (s.status != SolveStatus::Optimal) return std::nullopt;
  Vector p(m);
  for (std::size_t i = 0; i < m; ++i) p[i] = s.x[i] - s.x[m + i];
  return p;
}

namespace {

SolveResult solve_min_norm_certificate_lp(const Matrix& phi, const IndexSet& support,
                                          const Vector& signs, double beta,
                                          const SolverConfig& cfg) {
  std::size_t m = phi.rows(), n = phi.cols();
  bool linf = std::isinf(beta);
  CertificateLpFrame fr = certificate_lp_frame(phi, support, signs, linf);
  if (linf) {
    fr.lp.c[fr.t_col] = 1.0;
  } else {
    for (std::size_t i = 0; i < 2 * m; ++i) fr.lp.c[i] = 1.0;
  }

  LpSolution s = solve_lp(fr.lp, cfg);
  SolveResult r;
  r.status = s.status;
  r.iterations = s.iterations;
  if (s.status != SolveStatus::Optimal) return r;
  Vector p(m);
  for (std::size_t i = 0; i < m; ++i) p[i] = s.x[i] - s.x[m + i];
  r.primal = p;
  r.objective = norm_lp(p, beta);
  // Row multipliers assembled per column give the Lagrange vector v.
  Vector v(n, 0.0);
  for (std::size_t t = 0; t < fr.k; ++t) v[support[t]] = s.dual[t];
  for (std::size_t t = 0; t < fr.f; ++t) v[fr.off[t]] = s.dual[fr.k + t];
  r.dual = v;
  r.kkt_residual = certificate_kkt_residual(phi, support, signs, p, v, beta);
  enforce_residual_contract(r, cfg);
  return r;
}

}  // namespace

SolveResult solve_min_norm_certificate(const Matrix& phi, const IndexSet& support,
                                       const Vector& signs, double beta, const SolverConfig& cfg,
                                       const Vector* warm_p, const Vector* warm_v) {
  if (support.empty()) throw std::invalid_argument("solve_min_norm_certificate: empty support");
  if (signs.size() != support.size())
    throw std::invalid_argument("solve_min_norm_certificate: signs/support mismatch");
  for (double s : signs)
    if (s != 1.0 && s != -1.0)
      throw std::invalid_argument("solve_min_norm_certificate: signs must be +-1");
  for (std::size_t j : support)
    if (j >= phi.cols()) throw std::invalid_argument("solve_min_norm_certificate: index out of range");
  if (beta < 1.0) throw std::invalid_argument("solve_min_norm_certificate: beta must be >= 1");

  if (beta == 1.0 || std::isinf(beta)) return solve_min_norm_certificate_lp(phi, support, signs, beta, cfg);

  auto is_feasible = [&](const Vector& p) {
    Vector eta = multiply_transpose(phi, p);
    for (std::size_t t = 0; t < support.size(); ++t)
      if (std::abs(eta[support[t]] - signs[t]) > 1e-8) return false;
    return norm_linf(eta) <= 1.0 + 1e-8;
  };

  Vector start;
  if (warm_p && is_feasible(*warm_p)) {
    start = *warm_p;
  } else {
    std::optional<Vector> p0 = feasible_certificate_point(phi, support, signs, cfg);
    if (!p0) {
      SolveResult r;
      r.status = SolveStatus::Infeasible;
      return r;
    }
    start = *p0;
  }

  if (beta == 2.0) return solve_min_norm_certificate_qp(phi, support, signs, cfg, start);
  Vector v0 = warm_v ? *warm_v : Vector{};
  // The reweighted active-set path converges fast while the weight range
  // |p_i|^{beta-2} stays within working precision; for larger exponents the
  // warm-started first-order iteration is the reliable route.
  if (beta <= 4.0) {
    SolveResult irls = solve_min_norm_certificate_irls(phi, support, signs, beta, cfg, start);
    if (irls.status == SolveStatus::Optimal) return irls;
    SolverConfig polish = cfg;
    polish.max_iterations = std::min<std::size_t>(cfg.max_iterations, 30000);
    SolveResult fo = solve_min_norm_certificate_first_order(
        phi, support, signs, beta, polish, irls.primal.empty() ? start : irls.primal,
        irls.dual ? *irls.dual : v0);
    return fo.kkt_residual < irls.kkt_residual ? fo : irls;
  }
  return solve_min_norm_certificate_first_order(phi, support, signs, beta, cfg, start, v0);
}

}  // namespace supcert
