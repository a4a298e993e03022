#include <algorithm>
#include <cmath>

#include "supcert/certificate.hpp"

namespace supcert {

ProblemInstance make_instance(Matrix phi, Vector x0, double support_tol) {
  if (phi.cols() != x0.size()) throw std::invalid_argument("make_instance: phi/x0 shape mismatch");
  if (!phi.all_finite() || !all_finite(x0)) throw std::invalid_argument("make_instance: non-finite input");
  ProblemInstance inst;
  inst.support = support(x0, support_tol);
  if (inst.support.empty()) throw std::invalid_argument("make_instance: x0 must be nonzero");
  inst.signs.reserve(inst.support.size());
  for (std::size_t i : inst.support) inst.signs.push_back(sign_of(x0[i]));
  inst.phi = std::move(phi);
  inst.x0 = std::move(x0);
  return inst;
}

IndexSet support(const Vector& u, double tol) {
  if (tol < 0.0) throw std::invalid_argument("support: tol must be nonnegative");
  IndexSet s;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (std::abs(u[i]) > tol) s.push_back(i);
  return s;
}

IndexSet saturation_support(const Vector& u, double tol) {
  if (tol < 0.0) throw std::invalid_argument("saturation_support: tol must be nonnegative");
  double peak = norm_linf(u);
  IndexSet s;
  if (peak == 0.0) return s;  // zero vector saturates nowhere
  for (std::size_t i = 0; i < u.size(); ++i)
    if (std::abs(u[i]) >= peak - tol) s.push_back(i);
  return s;
}

namespace {

Certificate build_certificate(const ProblemInstance& inst, double beta, const SolveResult& solved,
                              double sat_tolerance) {
  Certificate cert;
  cert.beta = beta;
  cert.sat_tolerance = sat_tolerance;
  cert.solver_status = solved.status;
  cert.solve_residual = solved.kkt_residual;
  cert.p = solved.primal;
  cert.norm = norm_lp(cert.p, beta);
  if (solved.dual) cert.multiplier = *solved.dual;

  // Extended support: saturation of phi^T p against level 1.
  Vector eta = multiply_transpose(inst.phi, cert.p);
  for (std::size_t j = 0; j < eta.size(); ++j)
    if (std::abs(eta[j]) >= 1.0 - sat_tolerance) cert.extended_support.push_back(j);

  std::vector<bool> in_support(inst.phi.cols(), false);
  for (std::size_t i : inst.support) in_support[i] = true;
  for (std::size_t j : cert.extended_support)
    if (!in_support[j]) cert.support_excess.push_back(j);

  double pscale = std::max(1.0, norm_linf(cert.p));
  if (beta == 1.0) cert.p_support = support(cert.p, 1e-9 * pscale);
  if (std::isinf(beta)) cert.p_saturation = saturation_support(cert.p, 1e-9 * pscale);
  return cert;
}

}  // namespace

std::pair<bool, std::optional<Certificate>> is_identifiable(const ProblemInstance& inst,
                                                            const SolverConfig& cfg) {
  std::optional<Vector> p = feasible_certificate_point(inst.phi, inst.support, inst.signs, cfg);
  if (!p) return {false, std::nullopt};
  SolveResult as_result;
  as_result.primal = *p;
  as_result.status = SolveStatus::Optimal;
  as_result.kkt_residual = 0.0;
  return {true, build_certificate(inst, 2.0, as_result, kDefaultSatTol)};
}

Certificate min_norm_certificate(const ProblemInstance& inst, double alpha, const SolverConfig& cfg,
                                 double sat_tolerance, const Vector* warm_p, const Vector* warm_v) {
  double beta = holder_conjugate(alpha);
  SolveResult solved =
      solve_min_norm_certificate(inst.phi, inst.support, inst.signs, beta, cfg, warm_p, warm_v);
  if (solved.status == SolveStatus::Infeasible)
    throw NotIdentifiable("certificate set is empty; x0 is not a basis-pursuit solution");
  return build_certificate(inst, beta, solved, sat_tolerance);
}

std::size_t support_excess_size(const Certificate& cert) { return cert.support_excess.size(); }

bool certificate_j_is_pivot_stable(const ProblemInstance& inst, double alpha,
                                   const SolverConfig& cfg, double sat_tolerance) {
  double beta = holder_conjugate(alpha);
  if (beta != 1.0 && !std::isinf(beta)) return true;  // unique minimizer
  SolverConfig other = cfg;
  other.lp_pivot_rule =
      cfg.lp_pivot_rule == PivotRule::Bland ? PivotRule::Dantzig : PivotRule::Bland;
  Certificate a = min_norm_certificate(inst, alpha, cfg, sat_tolerance);
  Certificate b = min_norm_certificate(inst, alpha, other, sat_tolerance);
  return a.extended_support == b.extended_support;
}

}  // namespace supcert
