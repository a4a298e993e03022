#pragma once

#include <optional>

#include "supcert/solver.hpp"

namespace supcert {

struct NotIdentifiable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Regression setup: design matrix, nonzero sparse signal, its support and
// the sign pattern on the support.
struct ProblemInstance {
  Matrix phi;
  Vector x0;
  IndexSet support;  // I
  Vector signs;      // sign(x0) restricted to I
};

// Builds an instance, extracting support and signs; support entries are the
// coordinates with |x0_i| > support_tol. Throws when the support is empty.
ProblemInstance make_instance(Matrix phi, Vector x0, double support_tol = 0.0);

inline constexpr double kDefaultSatTol = 1e-7;

// A dual certificate together with the combinatorial data attached to it.
// J is the saturation of phi^T p against level 1; S/Z are the support and
// saturation of p itself, meaningful for beta = 1 and beta = inf.
struct Certificate {
  double beta = 2.0;
  Vector p;
  IndexSet extended_support;          // J
  IndexSet support_excess;            // J tilde = J \ I
  std::optional<IndexSet> p_support;     // S (beta = 1)
  std::optional<IndexSet> p_saturation;  // Z (beta = inf)
  double sat_tolerance = kDefaultSatTol;
  SolveStatus solver_status = SolveStatus::MaxIter;
  double norm = 0.0;                  // |p|_beta
  Vector multiplier;                  // length-n Lagrange vector of the program
  double solve_residual = kInf;
};

IndexSet support(const Vector& u, double tol);
// Indices where |u_i| reaches |u|_inf - tol; empty for u = 0.
IndexSet saturation_support(const Vector& u, double tol);

// Feasibility of the dual-certificate set; on success returns a certificate
// built from an arbitrary feasible point (diagnostics only, not min-norm).
std::pair<bool, std::optional<Certificate>> is_identifiable(const ProblemInstance& inst,
                                                            const SolverConfig& cfg = {});

// Minimum-norm certificate for the loss index alpha (beta is its Holder
// conjugate) and the combinatorial extraction around it.
Certificate min_norm_certificate(const ProblemInstance& inst, double alpha,
                                 const SolverConfig& cfg = {},
                                 double sat_tolerance = kDefaultSatTol,
                                 const Vector* warm_p = nullptr,
                                 const Vector* warm_v = nullptr);

std::size_t support_excess_size(const Certificate& cert);

// Diagnostic for the polyhedral cases, where the minimum-norm certificate
// may be non-unique: re-solves under the other pivot rule and reports
// whether the extended support J stayed the same.
bool certificate_j_is_pivot_stable(const ProblemInstance& inst, double alpha,
                                   const SolverConfig& cfg = {},
                                   double sat_tolerance = kDefaultSatTol);

}  // namespace supcert
