#pragma once

#include "supcert/certificate.hpp"

namespace supcert {

struct NotInjective : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TauOutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoiseRegimeViolated : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MuDegenerate : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Constants of the small-noise regime. mu only exists for the sup-norm loss,
// z_under only for the l1 loss; v_under is absent when the support excess is
// empty (its branch of c1 is then inactive). margin/corr are the derived
// quantities of the l2 analysis, which mirrors the polyhedral pattern and is
// flagged derived.
struct NoiseConstants {
  double a = 0.0;
  double b = 0.0;
  double nu = 0.0;
  std::optional<double> mu;
  std::optional<double> v_under;
  std::optional<double> z_under;
  std::optional<double> margin;
  std::optional<double> corr;
  double c1 = 0.0;
  double c2 = 0.0;
  bool derived = false;
};

struct InjectivityResult {
  bool injective = false;
  Matrix restricted_inverse;  // |J| x m realization of (P_T phi_J)^+
  std::string failure_reason;
};

struct StabilityAnalysis {
  double alpha = 2.0;
  Certificate cert;
  bool injective = false;
  Vector v;  // length n, supported on J
  Matrix restricted_inverse;
  NoiseConstants constants;
  double x_under = 0.0;
  double tau_max_noiseless = kInf;  // x_under / |v_I|_inf
};

// Restricted injectivity per loss: full column rank of phi_J (l2 loss),
// invertibility of phi_{S,J} (sup-norm loss), or of theta * phi_J (l1 loss).
InjectivityResult injectivity_check(const Certificate& cert, const Matrix& phi);

// Exhaustive verification of the sufficient conditions for |S| = |J| and
// invertibility of phi_{S,J}; only for small instances.
bool injectivity_bruteforce(const Matrix& phi, const Certificate& cert);

// Closed-form Lagrange multiplier vector, embedded over all n coordinates.
Vector multipliers(const Certificate& cert, const Matrix& phi, const Matrix& restricted_inverse);

NoiseConstants noise_constants(const ProblemInstance& inst, const StabilityAnalysis& analysis);

// Full pipeline: certificate, injectivity, multipliers, constants.
StabilityAnalysis analyze(const ProblemInstance& inst, double alpha, const SolverConfig& cfg = {},
                          double sat_tolerance = kDefaultSatTol);

// Noiseless solution x0_J - tau v_J for 0 < tau < tau_max_noiseless.
Vector noiseless_solution(const ProblemInstance& inst, const StabilityAnalysis& analysis, double tau);

// Closed-form prediction under noise; throws NoiseRegimeViolated outside the
// regime unless force is set.
Vector predicted_noisy_solution(const ProblemInstance& inst, const StabilityAnalysis& analysis,
                                const Vector& w, double tau, bool force = false);

struct VerificationReport {
  Vector x_pred;
  double kkt_residual = kInf;
  SolveResult solver;
  double objective_gap = kInf;
  IndexSet predicted_support;
  IndexSet solver_support;
  bool support_match = false;
};

// Cross-checks the prediction against an independent solve of the primal
// problem. Support equality is reported, not asserted: when the optimum is
// not unique the solver may legitimately return a different vertex.
VerificationReport verify_prediction(const ProblemInstance& inst, const StabilityAnalysis& analysis,
                             const Vector& w, double tau, const SolverConfig& cfg = {});

}  // namespace supcert
