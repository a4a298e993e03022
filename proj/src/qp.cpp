#include <algorithm>
#include <cmath>

#include "supcert/solver.hpp"

// Active-set machinery for minimum-norm certificates beyond the two LP cases.
//
// The l2 certificate is the exact solution of
//   min 1/2 |p|_2^2   s.t.   phi_{.,I}^T p = s_I,  |phi_{.,j}^T p| <= 1,
// found by a primal active-set iteration whose subproblems are least-norm
// solves. For a general smooth norm |.|_beta (1 < beta < inf) the same
// machinery runs inside an iteratively reweighted loop: each stage solves
//   min 1/2 p^T W p  over the same polyhedron,  w_i = (p_i^2 + eps^2)^{(beta-2)/2},
// with eps driven to zero. For beta < 2 each stage is a majorization step;
// for beta > 2 a backtracking line search on |p|_beta^beta keeps the descent
// monotone. The unique minimizer and its multiplier vector come out with
// active sets resolved exactly, which is what the saturation extraction
// downstream needs.

namespace supcert {

namespace {

struct WorkingConstraint {
  std::size_t col;
  double sign;  // active side: phi_col^T p == sign
};

struct ActiveSetProblem {
  const Matrix& phi;
  const IndexSet& support;
  const Vector& signs;
  std::vector<bool> on_support;

  explicit ActiveSetProblem(const Matrix& phi_in, const IndexSet& support_in,
                            const Vector& signs_in)
      : phi(phi_in), support(support_in), signs(signs_in), on_support(phi_in.cols(), false) {
    for (std::size_t t : support) on_support[t] = true;
  }
};

// Minimizer of 1/2 p^T W p over the current equality system; z receives the
// row multipliers. Returns false when the system is numerically dependent.
bool weighted_equality_solve(const ActiveSetProblem& prob, const Vector& winv,
                             const std::vector<WorkingConstraint>& working, Vector& p, Vector& z) {
  std::size_t m = prob.phi.rows();
  std::size_t rows = prob.support.size() + working.size();
  Matrix mt(rows, m);
  Vector rhs(rows);
  for (std::size_t t = 0; t < prob.support.size(); ++t) {
    for (std::size_t i = 0; i < m; ++i) mt(t, i) = prob.phi(i, prob.support[t]);
    rhs[t] = prob.signs[t];
  }
  for (std::size_t w = 0; w < working.size(); ++w) {
    std::size_t r = prob.support.size() + w;
    for (std::size_t i = 0; i < m; ++i) mt(r, i) = prob.phi(i, working[w].col);
    rhs[r] = working[w].sign;
  }
  Matrix gram(rows, rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = r; c < rows; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += mt(r, i) * winv[i] * mt(c, i);
      gram(r, c) = s;
      gram(c, r) = s;
    }
  try {
    z = solve_square(gram, rhs);
  } catch (const SingularMatrix&) {
    // Redundant rows (duplicated columns in the design) leave the system
    // consistent; the least-norm multiplier keeps the iteration going.
    z = multiply(pseudo_inverse(gram), rhs);
    if (norm_linf(sub(multiply(gram, z), rhs)) > 1e-7 * (1.0 + norm_linf(rhs))) return false;
  }
  Vector mtz = multiply_transpose(mt, z);
  p.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) p[i] = winv[i] * mtz[i];
  return true;
}

// Primal active-set loop in the metric W; start must be feasible. Returns the
// minimizer, the multipliers of its active rows, and the final working set.
SolveStatus weighted_active_set(const ActiveSetProblem& prob, const Vector& winv, Vector& p,
                                Vector& z, std::vector<WorkingConstraint>& working,
                                std::size_t max_iter) {
  std::size_t n = prob.phi.cols();
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector cand;
    if (!weighted_equality_solve(prob, winv, working, cand, z)) {
      if (working.empty()) return SolveStatus::MaxIter;
      working.pop_back();
      continue;
    }

    Vector dir = sub(cand, p);
    Vector eta_p = multiply_transpose(prob.phi, p);
    Vector eta_d = multiply_transpose(prob.phi, dir);
    double theta = 1.0;
    std::size_t block_col = n;
    double block_sign = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (prob.on_support[j]) continue;
      bool active = false;
      for (const auto& w : working) active = active || w.col == j;
      if (active) continue;
      for (double sgn : {1.0, -1.0}) {
        double slope = sgn * eta_d[j];
        if (slope <= 1e-13) continue;
        double room = 1.0 - sgn * eta_p[j];
        double step = room / slope;
        if (step < theta - 1e-13) {
          theta = std::max(0.0, step);
          block_col = j;
          block_sign = sgn;
        }
      }
    }

    if (block_col < n) {
      p = add(p, scale(dir, theta));
      working.push_back({block_col, block_sign});
      continue;
    }

    p = cand;
    // A bound active at sign sigma requires sigma * multiplier <= 0.
    double worst = 0.0;
    std::size_t worst_idx = working.size();
    for (std::size_t w = 0; w < working.size(); ++w) {
      double viol = working[w].sign * z[prob.support.size() + w];
      if (viol > worst + 1e-12) {
        worst = viol;
        worst_idx = w;
      }
    }
    if (worst_idx < working.size() && worst > 1e-10) {
      working.erase(working.begin() + static_cast<std::ptrdiff_t>(worst_idx));
      continue;
    }
    return SolveStatus::Optimal;
  }
  return SolveStatus::MaxIter;
}

// Multiplier vector over all columns: stationarity gives W p = sum z_r g_r,
// so v = z / normalizer maps the row multipliers onto the theory convention
// phi v in subdifferential of |p|_beta.
Vector assemble_multiplier(const ActiveSetProblem& prob, const Vector& z,
                           const std::vector<WorkingConstraint>& working, double normalizer) {
  Vector v(prob.phi.cols(), 0.0);
  if (normalizer <= 0.0 || z.size() != prob.support.size() + working.size()) return v;
  for (std::size_t t = 0; t < prob.support.size(); ++t)
    v[prob.support[t]] = z[t] / normalizer;
  for (std::size_t w = 0; w < working.size(); ++w)
    v[working[w].col] = z[prob.support.size() + w] / normalizer;
  return v;
}

}  // namespace

SolveResult solve_min_norm_certificate_qp(const Matrix& phi, const IndexSet& support,
                                          const Vector& signs, const SolverConfig& cfg,
                                          const Vector& feasible_start) {
  ActiveSetProblem prob(phi, support, signs);
  Vector p = feasible_start;
  Vector z;
  std::vector<WorkingConstraint> working;
  Vector winv(phi.rows(), 1.0);
  SolveStatus status = weighted_active_set(prob, winv, p, z, working, 50 * (phi.rows() + phi.cols()));

  SolveResult out;
  out.status = status;
  out.primal = p;
  out.objective = norm_l2(p);
  Vector v = assemble_multiplier(prob, z, working, norm_l2(p));
  out.dual = v;
  out.kkt_residual = certificate_kkt_residual(phi, support, signs, p, v, 2.0);
  if (out.status == SolveStatus::Optimal && out.kkt_residual > std::max(cfg.tolerance, 1e-7))
    out.status = SolveStatus::MaxIter;
  return out;
}

SolveResult solve_min_norm_certificate_irls(const Matrix& phi, const IndexSet& support,
                                            const Vector& signs, double beta,
                                            const SolverConfig& cfg, const Vector& feasible_start) {
  ActiveSetProblem prob(phi, support, signs);
  std::size_t m = phi.rows();
  Vector p = feasible_start;
  Vector z;
  std::vector<WorkingConstraint> working;

  auto objective = [&](const Vector& q) {
    double s = 0.0;
    for (double t : q) s += std::pow(std::abs(t), beta);
    return s;
  };

  SolveResult out;
  out.kkt_residual = kInf;
  double eps = std::max(0.1 * norm_linf(p), 1e-3);
  double tol = std::max(cfg.tolerance, 1e-9);
  std::size_t stage = 0;
  for (; stage < 60; ++stage) {
    double pmax = std::max(norm_linf(p), 1e-8);
    Vector winv(m);
    double wscale = std::pow(pmax * pmax + eps * eps, (beta - 2.0) / 2.0);
    for (std::size_t i = 0; i < m; ++i) {
      double w = std::pow(p[i] * p[i] + eps * eps, (beta - 2.0) / 2.0);
      // conditioning floor/cap relative to the largest weight in play
      w = std::clamp(w, wscale * 1e-10, wscale * 1e10);
      winv[i] = 1.0 / w;
    }
    Vector p_next = p;
    SolveStatus st = weighted_active_set(prob, winv, p_next, z, working, 30 * (m + phi.cols()));
    if (st != SolveStatus::Optimal) break;

    if (beta > 2.0) {
      // the quadratic model is not an upper bound here; keep the descent
      double f_old = objective(p);
      double theta = 1.0;
      Vector cand = p_next;
      for (int bt = 0; bt < 30 && objective(cand) > f_old; ++bt) {
        theta *= 0.5;
        for (std::size_t i = 0; i < m; ++i) cand[i] = p[i] + theta * (p_next[i] - p[i]);
      }
      p = cand;
    } else {
      p = p_next;
    }

    double normalizer = std::pow(norm_lp(p, beta), beta - 1.0);
    // stationarity of the weighted stage maps z onto multipliers of the
    // beta-norm through w_i p_i ~ sign(p_i) |p_i|^{beta-1}
    Vector v = assemble_multiplier(prob, z, working, normalizer);
    double res = certificate_kkt_residual(phi, support, signs, p, v, beta);
    if (res < out.kkt_residual) {
      out.primal = p;
      out.dual = v;
      out.kkt_residual = res;
    }
    if (res <= tol) break;
    eps = std::max(eps * 0.25, 1e-14);
  }
  out.iterations = stage + 1;
  out.objective = norm_lp(out.primal.empty() ? p : out.primal, beta);
  if (out.primal.empty()) out.primal = p;
  out.status = out.kkt_residual <= tol ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return out;
}

}  // namespace supcert
