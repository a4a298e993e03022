#include <algorithm>
#include <cmath>

#include "supcert/solver.hpp"

// Primal-dual splitting paths: the l2 primal/dual solves and the general-beta
// minimum-norm certificate program. Step sizes come from a power-method
// estimate of |phi|_2.

namespace supcert {

double operator_norm_estimate(const Matrix& phi) {
  std::size_t n = phi.cols();
  Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector w = multiply_transpose(phi, multiply(phi, v));
    double nw = norm_l2(w);
    if (nw == 0.0) return 0.0;
    double next = std::sqrt(nw);
    v = scale(w, 1.0 / nw);
    if (it > 4 && std::abs(next - lambda) <= 1e-12 * std::max(1.0, next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda * 1.02;  // safety margin keeps sigma*tau*L^2 < 1
}

namespace {

Vector soft_threshold(const Vector& z, double t) {
  Vector r(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    double v = z[i];
    r[i] = v > t ? v - t : (v < -t ? v + t : 0.0);
  }
  return r;
}

Vector project_l1_ball(const Vector& z, double radius) {
  if (norm_l1(z) <= radius) return z;
  Vector mag(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) mag[i] = std::abs(z[i]);
  std::sort(mag.begin(), mag.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < mag.size(); ++j) {
    cum += mag[j];
    double cand = (cum - radius) / static_cast<double>(j + 1);
    if (cand >= mag[j]) break;  // passed the breakpoint; previous theta stands
    theta = cand;
  }
  return soft_threshold(z, std::max(0.0, theta));
}

// Coordinate equation t + lam*q*t^(q-1) = a on t in [0, a]; monotone in t.
double lq_coordinate_solve(double a, double q, double lam) {
  if (a <= 0.0) return 0.0;
  double lo = 0.0, hi = a, t = a / (1.0 + lam * q);
  if (!(t > lo && t < hi)) t = 0.5 * a;
  for (int it = 0; it < 80; ++it) {
    double g = t + lam * q * std::pow(t, q - 1.0) - a;
    if (std::abs(g) <= 1e-15 * (1.0 + a)) break;
    if (g > 0.0)
      hi = t;
    else
      lo = t;
    double dg = 1.0 + lam * q * (q - 1.0) * std::pow(t, q - 2.0);
    double step = t - g / dg;
    t = (step > lo && step < hi) ? step : 0.5 * (lo + hi);
  }
  return t;
}

// Projection onto the unit lq ball through its Lagrangian form:
// x_i = sign(z_i) t_i with t_i + lam*q*t_i^(q-1) = |z_i| and lam > 0 tuned so
// that sum t_i^q = 1. The multiplier is carried between calls, so a solver
// projecting a slowly moving point pays a couple of Newton steps per call.
class LqBallProjector {
 public:
  explicit LqBallProjector(double q) : q_(q) {}

  Vector project(const Vector& z) {
    if (norm_lp(z, q_) <= 1.0) return z;
    Vector t(z.size());
    auto excess = [&](double lam) {
      double s = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        t[i] = lq_coordinate_solve(std::abs(z[i]), q_, lam);
        s += std::pow(t[i], q_);
      }
      return s - 1.0;
    };
    auto slope = [&](double lam) {
      // d/dlam sum t^q from the implicit coordinate equations
      double s = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (t[i] <= 0.0) continue;
        double tq1 = std::pow(t[i], q_ - 1.0);
        double dt = -q_ * tq1 / (1.0 + lam * q_ * (q_ - 1.0) * std::pow(t[i], q_ - 2.0));
        s += q_ * tq1 * dt;
      }
      return s;
    };

    double lam = warm_lambda_ > 0.0 ? warm_lambda_ : 1.0;
    double lo = 0.0, hi = kInf;
    double e = excess(lam);
    // bracket around the warm start
    while (e > 0.0) {
      lo = lam;
      lam = std::isinf(hi) ? lam * 4.0 : 0.5 * (lam + hi);
      if (lam > 1e18) break;
      e = excess(lam);
    }
    if (e < 0.0) hi = lam;
    for (int it = 0; it < 100; ++it) {
      if (std::abs(e) <= 1e-13) break;
      if (e > 0.0)
        lo = lam;
      else
        hi = lam;
      double g = slope(lam);
      double next = g < 0.0 ? lam - e / g : 0.0;
      if (!(next > lo && next < hi))
        next = std::isinf(hi) ? 2.0 * std::max(lam, 1.0) : 0.5 * (lo + hi);
      lam = next;
      e = excess(lam);
    }
    warm_lambda_ = lam;
    Vector x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = sign_of(z[i]) * t[i];
    return x;
  }

 private:
  double q_;
  double warm_lambda_ = 0.0;
};

Vector project_lq_ball_unit(const Vector& z, double q) {
  LqBallProjector proj(q);
  return proj.project(z);
}

}  // namespace

Vector project_lp_ball(const Vector& z, double alpha, double radius) {
  if (radius <= 0.0) return Vector(z.size(), 0.0);
  if (std::isinf(alpha)) {
    Vector r(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) r[i] = std::clamp(z[i], -radius, radius);
    return r;
  }
  if (alpha == 2.0) {
    double n = norm_l2(z);
    return n <= radius ? z : scale(z, radius / n);
  }
  if (alpha == 1.0) return project_l1_ball(z, radius);
  if (alpha < 1.0) throw std::invalid_argument("project_lp_ball: alpha < 1");
  return scale(project_lq_ball_unit(scale(z, 1.0 / radius), alpha), radius);
}

namespace {

// prox of t*|.|_beta via the Moreau identity: subtract the projection onto
// the dual-norm ball of radius t.
Vector prox_norm(const Vector& w, double beta, double t) {
  Vector proj = project_lp_ball(w, holder_conjugate(beta), t);
  return sub(w, proj);
}

}  // namespace

SolveResult solve_primal_first_order(const Matrix& phi, const Vector& y, double alpha, double tau,
                                     const SolverConfig& cfg) {
  std::size_t m = phi.rows(), n = phi.cols();
  if (y.size() != m) throw std::invalid_argument("solve_primal_first_order: shape mismatch");
  if (tau <= 0.0) throw std::invalid_argument("solve_primal_first_order: tau must be positive");

  double l = std::max(operator_norm_estimate(phi), 1e-12);
  double sigma = 0.95 / l, step = 0.95 / l;
  const double rho = 1.8;  // over-relaxation

  Vector x(n, 0.0), q(m, 0.0);
  SolveResult best;
  best.primal = x;
  best.dual = Vector(m, 0.0);
  best.kkt_residual = kInf;

  std::size_t it = 0;
  for (; it < cfg.max_iterations; ++it) {
    // x-step, then q-step against the extrapolated point, then relaxation.
    Vector xt = soft_threshold(sub(x, scale(multiply_transpose(phi, q), step)), step);
    Vector xbar = sub(scale(xt, 2.0), x);
    Vector z = add(q, scale(multiply(phi, xbar), sigma));
    Vector center = scale(z, 1.0 / sigma);
    Vector proj = add(y, project_lp_ball(sub(center, y), alpha, tau));
    Vector qt = sub(z, scale(proj, sigma));
    for (std::size_t i = 0; i < n; ++i) x[i] += rho * (xt[i] - x[i]);
    for (std::size_t i = 0; i < m; ++i) q[i] += rho * (qt[i] - q[i]);

    if (it % 50 == 49 || it + 1 == cfg.max_iterations) {
      Vector p_hat = scale(q, -1.0);
      double res = kkt_residual(x, p_hat, phi, y, alpha, tau);
      // Enforce feasibility in the residual as well: the prox keeps x only
      // asymptotically feasible.
      double infeas = std::max(0.0, norm_lp(sub(multiply(phi, x), y), alpha) - tau);
      res = std::max(res, infeas / std::max(1.0, tau));
      if (res < best.kkt_residual) {
        best.primal = x;
        best.dual = p_hat;
        best.kkt_residual = res;
      }
      if (best.kkt_residual <= cfg.tolerance) break;
    }
  }
  best.objective = norm_l1(best.primal);
  best.iterations = it + 1;
  best.status = best.kkt_residual <= cfg.tolerance ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return best;
}

SolveResult solve_dual_first_order(const Matrix& phi, const Vector& y, double beta, double tau,
                                   const SolverConfig& cfg) {
  std::size_t m = phi.rows(), n = phi.cols();
  double l = std::max(operator_norm_estimate(phi), 1e-12);
  double sigma = 0.95 / l, step = 0.95 / l;
  const double rho = 1.8;

  Vector p(m, 0.0), q(n, 0.0);
  SolveResult best;
  best.primal = p;
  best.dual = Vector(n, 0.0);
  best.kkt_residual = kInf;

  std::size_t it = 0;
  for (; it < cfg.max_iterations; ++it) {
    Vector pt = prox_norm(add(sub(p, scale(multiply(phi, q), step)), scale(y, step)), beta, step * tau);
    Vector pbar = sub(scale(pt, 2.0), p);
    Vector z = add(q, scale(multiply_transpose(phi, pbar), sigma));
    Vector qt(n);
    for (std::size_t j = 0; j < n; ++j) qt[j] = z[j] - sigma * std::clamp(z[j] / sigma, -1.0, 1.0);
    for (std::size_t i = 0; i < m; ++i) p[i] += rho * (pt[i] - p[i]);
    for (std::size_t j = 0; j < n; ++j) q[j] += rho * (qt[j] - q[j]);

    if (it % 50 == 49 || it + 1 == cfg.max_iterations) {
      double res;
      if (tau > 0.0) {
        res = kkt_residual(q, p, phi, y, holder_conjugate(beta), tau);
      } else {
        res = std::max(0.0, norm_linf(multiply_transpose(phi, p)) - 1.0);
      }
      if (res < best.kkt_residual) {
        best.primal = p;
        best.dual = q;
        best.kkt_residual = res;
      }
      if (best.kkt_residual <= cfg.tolerance) break;
    }
  }
  best.objective = -dot(y, best.primal) + tau * norm_lp(best.primal, beta);
  best.iterations = it + 1;
  best.status = best.kkt_residual <= cfg.tolerance ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return best;
}

// Optimality certificate for the minimum-norm program, via its Lagrange
// dual: v (theory convention, phi v in the subdifferential of |p|_beta) is
// dual-feasible when |phi v|_conj(beta) <= 1, with dual objective
// <s_I, v_I> - sum_{j off I} |v_j|. The residual combines primal
// feasibility, dual feasibility, and the normalized duality gap; it avoids
// the ill-conditioned pointwise gradient match near beta = 1.
double certificate_kkt_residual(const Matrix& phi, const IndexSet& support, const Vector& signs,
                                const Vector& p, const Vector& v, double beta) {
  Vector eta = multiply_transpose(phi, p);
  std::vector<bool> on_support(phi.cols(), false);
  for (std::size_t t = 0; t < support.size(); ++t) on_support[support[t]] = true;

  double feas_eq = 0.0;
  double dual_obj = 0.0;
  for (std::size_t t = 0; t < support.size(); ++t) {
    feas_eq = std::max(feas_eq, std::abs(eta[support[t]] - signs[t]));
    dual_obj += signs[t] * v[support[t]];
  }
  double feas_box = 0.0;
  for (std::size_t j = 0; j < phi.cols(); ++j) {
    if (on_support[j]) continue;
    feas_box = std::max(feas_box, std::abs(eta[j]) - 1.0);
    dual_obj -= std::abs(v[j]);
  }
  double primal_obj = norm_lp(p, beta);
  double dual_feas = std::max(0.0, norm_lp(multiply(phi, v), holder_conjugate(beta)) - 1.0);
  double gap = std::max(0.0, primal_obj - dual_obj) / std::max(1.0, primal_obj);
  return std::max({feas_eq, std::max(0.0, feas_box), dual_feas, gap});
}

SolveResult solve_min_norm_certificate_first_order(const Matrix& phi, const IndexSet& support,
                                                   const Vector& signs, double beta,
                                                   const SolverConfig& cfg, const Vector& p0,
                                                   const Vector& v0) {
  std::size_t m = phi.rows(), n = phi.cols();
  double l = std::max(operator_norm_estimate(phi), 1e-12);
  double sigma = 0.95 / l, step = 0.95 / l;
  const double rho = 1.8;

  std::vector<bool> on_support(n, false);
  Vector s_full(n, 0.0);
  for (std::size_t t = 0; t < support.size(); ++t) {
    on_support[support[t]] = true;
    s_full[support[t]] = signs[t];
  }

  Vector p = p0.empty() ? Vector(m, 0.0) : p0;
  // the iteration's dual variable is the negated multiplier
  Vector q = v0.size() == n ? scale(v0, -1.0) : Vector(n, 0.0);
  SolveResult best;
  best.primal = p;
  best.dual = Vector(n, 0.0);
  best.kkt_residual = kInf;

  // Stateful projector for a general dual-ball exponent: the projected point
  // moves slowly across iterations, so the carried multiplier makes each
  // projection a few Newton steps.
  double ball_q = holder_conjugate(beta);
  bool general_ball = ball_q != 1.0 && ball_q != 2.0 && !std::isinf(ball_q);
  LqBallProjector lq(ball_q);
  auto prox_beta = [&](const Vector& w, double t) {
    Vector proj = general_ball ? scale(lq.project(scale(w, 1.0 / t)), t)
                               : project_lp_ball(w, ball_q, t);
    return sub(w, proj);
  };

  std::size_t it = 0;
  for (; it < cfg.max_iterations; ++it) {
    Vector pt = prox_beta(sub(p, scale(multiply(phi, q), step)), step);
    Vector pbar = sub(scale(pt, 2.0), p);
    Vector z = add(q, scale(multiply_transpose(phi, pbar), sigma));
    Vector qt(n);
    for (std::size_t j = 0; j < n; ++j) {
      double cj = z[j] / sigma;
      double proj = on_support[j] ? s_full[j] : std::clamp(cj, -1.0, 1.0);
      qt[j] = z[j] - sigma * proj;
    }
    for (std::size_t i = 0; i < m; ++i) p[i] += rho * (pt[i] - p[i]);
    for (std::size_t j = 0; j < n; ++j) q[j] += rho * (qt[j] - q[j]);

    if (it % 50 == 49 || it + 1 == cfg.max_iterations) {
      // The multiplier of the theory is v = -q.
      double res = certificate_kkt_residual(phi, support, signs, p, scale(q, -1.0), beta);
      if (res < best.kkt_residual) {
        best.primal = p;
        best.dual = scale(q, -1.0);
        best.kkt_residual = res;
      }
      if (best.kkt_residual <= cfg.tolerance) break;
    }
  }
  best.objective = norm_lp(best.primal, beta);
  best.iterations = it + 1;
  best.status = best.kkt_residual <= cfg.tolerance ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return best;
}

}  // namespace supcert
