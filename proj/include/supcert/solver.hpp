#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "supcert/linalg.hpp"

namespace supcert {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Holder conjugate: pairs (1, inf), (2, 2), (inf, 1).
inline double holder_conjugate(double alpha) {
  if (std::isinf(alpha)) return 1.0;
  if (alpha == 1.0) return kInf;
  return alpha / (alpha - 1.0);
}

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIter };

std::string to_string(SolveStatus s);

enum class PivotRule { Bland, Dantzig };

struct SolverConfig {
  double tolerance = 1e-9;
  std::size_t max_iterations = 200000;
  PivotRule lp_pivot_rule = PivotRule::Bland;
};

struct SolveResult {
  Vector primal;
  std::optional<Vector> dual;
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIter;
  double kkt_residual = kInf;
  std::size_t iterations = 0;

  std::string diagnostics_line() const;
};

// ---- LP core ----------------------------------------------------------------
// Standard computational form: min c'x  s.t.  a x = b, 0 <= x <= upper.
// An empty upper vector means all variables are unbounded above.

struct LpProblem {
  Matrix a;
  Vector b;
  Vector c;
  Vector upper;
};

struct LpSolution {
  SolveStatus status = SolveStatus::MaxIter;
  Vector x;
  Vector dual;  // one multiplier per row of a, zero on redundant rows
  double objective = 0.0;
  std::size_t iterations = 0;
};

// Two-phase revised simplex, dense basis inverse, Bland's rule by default.
LpSolution solve_lp(const LpProblem& lp, const SolverConfig& cfg = {});

// ---- problem-specific solves --------------------------------------------------

// min |x|_1  s.t.  phi x = y.
SolveResult solve_basis_pursuit(const Matrix& phi, const Vector& y, const SolverConfig& cfg = {});

// min |x|_1  s.t.  |phi x - y|_alpha <= tau.  LP for alpha in {1, inf},
// primal-dual splitting for alpha = 2. dual holds the certifying vector p.
SolveResult solve_primal(const Matrix& phi, const Vector& y, double alpha, double tau,
                         const SolverConfig& cfg = {});

// First-order path for the same problem (any alpha in {1, 2, inf}); used to
// cross-check the LP vertices.
SolveResult solve_primal_first_order(const Matrix& phi, const Vector& y, double alpha, double tau,
                                     const SolverConfig& cfg = {});

// min -<y,p> + tau |p|_beta  s.t.  |phi^T p|_inf <= 1.  dual holds the
// recovered primal x.
SolveResult solve_dual(const Matrix& phi, const Vector& y, double beta, double tau,
                       const SolverConfig& cfg = {});

// min |p|_beta  s.t.  phi_{.,support}^T p = signs, |phi^T p|_inf <= 1.
// Exact path for beta in {1, inf} (LP vertex) and beta = 2 (active-set QP);
// any beta in (1, inf) accepted through the first-order path. Infeasible
// exactly when the certificate set is empty. dual (when present) holds the
// constraint multipliers indexed by column, i.e. the Lagrange vector whose
// restriction to the saturated set is the multiplier v of the theory.
SolveResult solve_min_norm_certificate(const Matrix& phi, const IndexSet& support,
                                       const Vector& signs, double beta,
                                       const SolverConfig& cfg = {},
                                       const Vector* warm_p = nullptr,
                                       const Vector* warm_v = nullptr);

// ---- optimality diagnostics ----------------------------------------------------

// Distance (max-norm, componentwise) of g to the subdifferential of |.|_beta
// at p. p = 0 gives the dual-ball gauge violation (|g|_conj(beta) - 1)+.
double subdifferential_distance(const Vector& g, const Vector& p, double beta);

// Residual of the primal-dual first-order conditions for the constrained
// problem: sign alignment on supp(x), dual feasibility |phi^T p|_inf <= 1,
// and membership of (y - phi x)/tau in the subdifferential of |p|_beta.
double kkt_residual(const Vector& x, const Vector& p, const Matrix& phi, const Vector& y,
                    double alpha, double tau);

// ---- first-order building blocks (exposed for tests) ----------------------------

double operator_norm_estimate(const Matrix& phi);
Vector project_lp_ball(const Vector& z, double alpha, double radius);

// Specific solve paths behind solve_dual / solve_min_norm_certificate; the
// cross-check tests drive them directly.
SolveResult solve_dual_first_order(const Matrix& phi, const Vector& y, double beta, double tau,
                                   const SolverConfig& cfg);
SolveResult solve_min_norm_certificate_first_order(const Matrix& phi, const IndexSet& support,
                                                   const Vector& signs, double beta,
                                                   const SolverConfig& cfg, const Vector& p0,
                                                   const Vector& v0 = {});
SolveResult solve_min_norm_certificate_qp(const Matrix& phi, const IndexSet& support,
                                          const Vector& signs, const SolverConfig& cfg,
                                          const Vector& feasible_start);
// Iteratively reweighted active-set path for 1 < beta < inf; the first-order
// path remains available as a fallback and cross-check.
SolveResult solve_min_norm_certificate_irls(const Matrix& phi, const IndexSet& support,
                                            const Vector& signs, double beta,
                                            const SolverConfig& cfg, const Vector& feasible_start);
double certificate_kkt_residual(const Matrix& phi, const IndexSet& support, const Vector& signs,
                                const Vector& p, const Vector& v, double beta);
// Any point of the certificate polyhedron, or nullopt when it is empty.
std::optional<Vector> feasible_certificate_point(const Matrix& phi, const IndexSet& support,
                                                 const Vector& signs, const SolverConfig& cfg);

}  // namespace supcert
