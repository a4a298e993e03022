#include <algorithm>
#include <cmath>
#include <sstream>

#include "supcert/stability.hpp"

namespace supcert {

namespace {

double loss_alpha_of(const Certificate& cert) { return holder_conjugate(cert.beta); }

Vector snapped_signs(const Vector& eta, const IndexSet& idx, double tol, const char* what) {
  Vector s(idx.size());
  for (std::size_t t = 0; t < idx.size(); ++t) {
    double v = eta[idx[t]];
    if (std::abs(std::abs(v) - 1.0) > tol) {
      std::ostringstream os;
      os << what << ": entry " << idx[t] << " = " << v << " is not within " << tol << " of +-1";
      throw std::runtime_error(os.str());
    }
    s[t] = v >= 0.0 ? 1.0 : -1.0;
  }
  return s;
}

}  // namespace

InjectivityResult injectivity_check(const Certificate& cert, const Matrix& phi) {
  double alpha = loss_alpha_of(cert);
  const IndexSet& j_set = cert.extended_support;
  std::size_t m = phi.rows();
  InjectivityResult out;

  if (alpha == 2.0) {
    Matrix phi_j = select_cols(phi, j_set);
    if (numerical_rank(phi_j) != j_set.size()) {
      out.failure_reason = "phi_J is column rank deficient";
      return out;
    }
    out.injective = true;
    out.restricted_inverse = pseudo_inverse(phi_j);
    return out;
  }

  if (std::isinf(alpha)) {
    if (!cert.p_support) throw std::logic_error("injectivity_check: certificate lacks S");
    const IndexSet& s_set = *cert.p_support;
    if (s_set.size() != j_set.size()) {
      out.failure_reason = "|S| = " + std::to_string(s_set.size()) +
                           " differs from |J| = " + std::to_string(j_set.size());
      return out;
    }
    Matrix inv;
    try {
      inv = invert_square(select(phi, s_set, j_set));
    } catch (const SingularMatrix&) {
      out.failure_reason = "phi_{S,J} is singular";
      return out;
    }
    out.injective = true;
    out.restricted_inverse = Matrix(j_set.size(), m, 0.0);
    for (std::size_t r = 0; r < j_set.size(); ++r)
      for (std::size_t c = 0; c < s_set.size(); ++c) out.restricted_inverse(r, s_set[c]) = inv(r, c);
    return out;
  }

  if (alpha == 1.0) {
    if (!cert.p_saturation) throw std::logic_error("injectivity_check: certificate lacks Z");
    const IndexSet& z_set = *cert.p_saturation;
    IndexSet zc = complement(z_set, m);
    if (zc.size() + 1 != j_set.size()) {
      out.failure_reason = "|Z^c| + 1 = " + std::to_string(zc.size() + 1) +
                           " differs from |J| = " + std::to_string(j_set.size());
      return out;
    }
    // theta stacks the identity rows off the saturation of p with one
    // aggregated sign row over it.
    Matrix theta(j_set.size(), m, 0.0);
    for (std::size_t r = 0; r < zc.size(); ++r) theta(r, zc[r]) = 1.0;
    for (std::size_t z : z_set) theta(j_set.size() - 1, z) = sign_of(cert.p[z]);
    Matrix phi_tilde = multiply(theta, select_cols(phi, j_set));
    Matrix inv;
    try {
      inv = invert_square(phi_tilde);
    } catch (const SingularMatrix&) {
      out.failure_reason = "theta * phi_J is singular";
      return out;
    }
    out.injective = true;
    out.restricted_inverse = multiply(inv, theta);
    return out;
  }

  throw std::invalid_argument("injectivity_check: loss index must be 1, 2, or inf");
}

namespace {

// Visits all size-r index subsets of {0..univ-1}; returns false if the
// visitor stops the enumeration.
template <typename F>
bool for_each_subset(std::size_t univ, std::size_t r, F&& visit) {
  if (r > univ) return true;
  IndexSet idx(r);
  for (std::size_t i = 0; i < r; ++i) idx[i] = i;
  while (true) {
    if (!visit(idx)) return false;
    if (r == 0) return true;
    std::size_t i = r;
    while (i > 0 && idx[i - 1] == univ - r + (i - 1)) --i;
    if (i == 0) return true;
    ++idx[i - 1];
    for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

double binomial_total(std::size_t n, std::size_t below) {
  double total = 0.0, c = 1.0;
  for (std::size_t r = 0; r < below; ++r) {
    total += c;
    c = c * static_cast<double>(n - r) / static_cast<double>(r + 1);
  }
  return total;
}

bool in_column_image(const Matrix& mat, const Vector& rhs) {
  if (mat.cols() == 0) return norm_linf(rhs) <= 1e-8;
  Vector fitted = multiply(mat, multiply(pseudo_inverse(mat), rhs));
  return norm_linf(sub(rhs, fitted)) <= 1e-8;
}

}  // namespace

bool injectivity_bruteforce(const Matrix& phi, const Certificate& cert) {
  const IndexSet& j_set = cert.extended_support;
  std::size_t m = phi.rows(), n = phi.cols();
  if (j_set.size() > 12 || m > 12)
    throw TooLarge("injectivity_bruteforce: guard |J| <= 12 and m <= 12 exceeded");
  if (!cert.p_support) throw std::logic_error("injectivity_bruteforce: certificate lacks S");
  const IndexSet& s_set = *cert.p_support;

  // The conditions presume phi_J^T p is a sign vector; anything else (a zero
  // column inside J, say) already falsifies its hypotheses.
  Vector eta = multiply_transpose(phi, cert.p);
  double snap_tol = std::max(cert.sat_tolerance, 1e-6);
  for (std::size_t j : j_set)
    if (std::abs(std::abs(eta[j]) - 1.0) > snap_tol) return false;
  Vector s_j = snapped_signs(eta, j_set, snap_tol, "s_J");
  Vector q_s(s_set.size());
  for (std::size_t t = 0; t < s_set.size(); ++t) q_s[t] = sign_of(cert.p[s_set[t]]);

  if (binomial_total(m, j_set.size()) + binomial_total(n, s_set.size()) > 2e6)
    throw TooLarge("injectivity_bruteforce: enumeration too large");

  // s_J must avoid the row-restricted images of phi^T for every strictly
  // smaller row subset.
  for (std::size_t r = 0; r < j_set.size(); ++r) {
    bool ok = for_each_subset(m, r, [&](const IndexSet& rows) {
      Matrix mt = transpose(select(phi, rows, j_set));  // |J| x r
      return !in_column_image(mt, s_j);
    });
    if (!ok) return false;
  }
  // q_S must avoid the column-restricted images of phi for every strictly
  // smaller column subset.
  for (std::size_t r = 0; r < s_set.size(); ++r) {
    bool ok = for_each_subset(n, r, [&](const IndexSet& cols) {
      Matrix ms = select(phi, s_set, cols);  // |S| x r
      return !in_column_image(ms, q_s);
    });
    if (!ok) return false;
  }
  return true;
}

Vector multipliers(const Certificate& cert, const Matrix& phi, const Matrix& restricted_inverse) {
  double alpha = loss_alpha_of(cert);
  const IndexSet& j_set = cert.extended_support;
  if (restricted_inverse.rows() != j_set.size() || restricted_inverse.cols() != phi.rows())
    throw NotInjective("multipliers: restricted inverse missing or mis-sized");

  Vector rhs(phi.rows(), 0.0);
  if (alpha == 2.0) {
    double pn = norm_l2(cert.p);
    if (pn == 0.0) throw std::logic_error("multipliers: certificate is zero");
    rhs = scale(cert.p, 1.0 / pn);
  } else if (std::isinf(alpha)) {
    for (std::size_t i : *cert.p_support) rhs[i] = sign_of(cert.p[i]);
  } else if (alpha == 1.0) {
    const IndexSet& z_set = *cert.p_saturation;
    // theta rhs = delta_{|J|} holds for the sign pattern spread over Z.
    for (std::size_t i : z_set) rhs[i] = sign_of(cert.p[i]) / static_cast<double>(z_set.size());
  } else {
    throw std::invalid_argument("multipliers: loss index must be 1, 2, or inf");
  }

  Vector v_j = multiply(restricted_inverse, rhs);
  Vector v(phi.cols(), 0.0);
  for (std::size_t t = 0; t < j_set.size(); ++t) v[j_set[t]] = v_j[t];

  double dist = subdifferential_distance(multiply(phi, v), cert.p, cert.beta);
  if (dist > 1e-6) {
    std::ostringstream os;
    os << "multipliers: phi v is not a subgradient of |p|_beta (distance " << dist << ")";
    throw std::logic_error(os.str());
  }
  return v;
}

NoiseConstants noise_constants(const ProblemInstance& inst, const StabilityAnalysis& analysis) {
  if (!analysis.injective) throw NotInjective("noise_constants: injectivity check not passed");
  const Certificate& cert = analysis.cert;
  const IndexSet& j_set = cert.extended_support;
  const Matrix& rinv = analysis.restricted_inverse;
  const Matrix& phi = inst.phi;
  double alpha = analysis.alpha;

  NoiseConstants c;
  c.nu = norm_linf(analysis.v);
  if (!cert.support_excess.empty()) {
    double vu = kInf;
    for (std::size_t j : cert.support_excess) vu = std::min(vu, std::abs(analysis.v[j]));
    c.v_under = vu;
  }
  Vector phi_v = multiply(phi, analysis.v);

  if (std::isinf(alpha)) {
    const IndexSet& s_set = *cert.p_support;
    c.b = op_norm_inf_inf(rinv);
    IndexSet sc = complement(s_set, phi.rows());
    double mu = 0.0;
    for (std::size_t i : sc) mu = std::max(mu, std::abs(phi_v[i]));
    c.mu = mu;
    Matrix inv_sj(j_set.size(), j_set.size());
    for (std::size_t r = 0; r < j_set.size(); ++r)
      for (std::size_t t = 0; t < s_set.size(); ++t) inv_sj(r, t) = rinv(r, s_set[t]);
    c.a = op_norm_inf_inf(multiply(select(phi, sc, j_set), inv_sj));
    if (mu >= 1.0 - 1e-9)
      throw MuDegenerate("noise_constants: mu >= 1, no admissible noise level");
    double c1 = (1.0 - mu) / (1.0 + c.a);
    if (c.v_under) c1 = std::min(c1, *c.v_under / c.b);
    c.c1 = c1;
  } else if (alpha == 1.0) {
    const IndexSet& z_set = *cert.p_saturation;
    c.b = op_norm_inf_inf(rinv);
    double zu = kInf;
    for (std::size_t i : z_set) zu = std::min(zu, std::abs(phi_v[i]));
    c.z_under = zu;
    Matrix dz(z_set.size(), phi.rows(), 0.0);
    for (std::size_t r = 0; r < z_set.size(); ++r) dz(r, z_set[r]) = 1.0;
    Matrix diff = sub(dz, multiply(select(phi, z_set, j_set), rinv));
    c.a = op_norm_1_inf(diff);
    double c1 = kInf;
    if (c.v_under) c1 = std::min(c1, *c.v_under / c.b);
    if (c.a > 1e-14) c1 = std::min(c1, zu / c.a);
    // Both branches can drop out on degenerate designs; a unit cap keeps the
    // packaging tau <= c2 x_under meaningful (smaller c1 stays sufficient).
    if (std::isinf(c1)) c1 = 1.0;
    c.c1 = c1;
  } else if (alpha == 2.0) {
    c.derived = true;
    c.b = op_norm_2_inf(rinv);
    Matrix phi_j = select_cols(phi, j_set);
    Matrix proj = multiply(phi_j, rinv);  // projector onto Im(phi_J)
    IndexSet off = complement(j_set, phi.cols());
    double margin = kInf, corr = 0.0;
    Vector eta = multiply_transpose(phi, cert.p);
    for (std::size_t j : off) {
      margin = std::min(margin, 1.0 - std::abs(eta[j]));
      Vector col(phi.rows());
      for (std::size_t i = 0; i < phi.rows(); ++i) col[i] = phi(i, j);
      Vector residual = sub(col, multiply(proj, col));
      corr = std::max(corr, norm_l2(residual));
    }
    if (!off.empty()) {
      c.margin = margin;
      c.corr = corr;
    }
    c.a = corr;
    const double shrink = std::sqrt(3.0) / 2.0;  // tau_eff >= sqrt(3)/2 tau once |w|_2 <= tau/2
    double c1 = 0.5;
    if (c.v_under) c1 = std::min(c1, shrink * *c.v_under / c.b);
    if (!off.empty() && corr > 1e-14 && cert.norm > 0.0)
      c1 = std::min(c1, shrink * margin / (corr * cert.norm));
    c.c1 = c1;
  } else {
    throw std::invalid_argument("noise_constants: loss index must be 1, 2, or inf");
  }

  c.c2 = 1.0 / (c.b * c.c1 + c.nu);
  return c;
}

StabilityAnalysis analyze(const ProblemInstance& inst, double alpha, const SolverConfig& cfg,
                          double sat_tolerance) {
  StabilityAnalysis a;
  a.alpha = alpha;
  a.cert = min_norm_certificate(inst, alpha, cfg, sat_tolerance);
  if (norm_linf(a.cert.p) == 0.0) throw std::logic_error("analyze: zero certificate");
  InjectivityResult inj = injectivity_check(a.cert, inst.phi);
  if (!inj.injective) throw NotInjective("analyze: " + inj.failure_reason);
  a.injective = true;
  a.restricted_inverse = inj.restricted_inverse;
  a.v = multipliers(a.cert, inst.phi, a.restricted_inverse);
  a.constants = noise_constants(inst, a);
  double xu = kInf, vi = 0.0;
  for (std::size_t t = 0; t < inst.support.size(); ++t) {
    xu = std::min(xu, std::abs(inst.x0[inst.support[t]]));
    vi = std::max(vi, std::abs(a.v[inst.support[t]]));
  }
  a.x_under = xu;
  a.tau_max_noiseless = vi > 0.0 ? xu / vi : kInf;
  return a;
}

Vector noiseless_solution(const ProblemInstance& inst, const StabilityAnalysis& analysis, double tau) {
  if (!(tau > 0.0) || tau >= analysis.tau_max_noiseless) {
    std::ostringstream os;
    os << "noiseless_solution: tau = " << tau << " outside (0, " << analysis.tau_max_noiseless << ")";
    throw TauOutOfRange(os.str());
  }
  const IndexSet& j_set = analysis.cert.extended_support;
  Vector x(inst.x0.size(), 0.0);
  for (std::size_t t = 0; t < j_set.size(); ++t)
    x[j_set[t]] = inst.x0[j_set[t]] - tau * analysis.v[j_set[t]];
  for (std::size_t i : inst.support)
    if (sign_of(x[i]) != sign_of(inst.x0[i]))
      throw std::logic_error("noiseless_solution: sign flipped inside the valid tau range");
  return x;
}

Vector predicted_noisy_solution(const ProblemInstance& inst, const StabilityAnalysis& analysis,
                                const Vector& w, double tau, bool force) {
  if (w.size() != inst.phi.rows()) throw std::invalid_argument("predicted_noisy_solution: bad w size");
  if (!(tau > 0.0)) throw std::invalid_argument("predicted_noisy_solution: tau must be positive");
  const NoiseConstants& c = analysis.constants;
  double wnorm = norm_lp(w, analysis.alpha);
  // |w|_alpha < c1 tau is strict in the theory; near-equality counts as a
  // violation. tau <= c2 x_under is not strict, so roundoff is forgiven.
  if (!force && wnorm >= c.c1 * tau * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "noise inequality violated: |w|_alpha = " << wnorm << " >= c1*tau = " << c.c1 * tau;
    throw NoiseRegimeViolated(os.str());
  }
  if (!force && tau > c.c2 * analysis.x_under * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "tau inequality violated: tau = " << tau << " > c2*x_under = " << c.c2 * analysis.x_under;
    throw NoiseRegimeViolated(os.str());
  }

  const IndexSet& j_set = analysis.cert.extended_support;
  Vector correction = multiply(analysis.restricted_inverse, w);
  Vector x(inst.x0.size(), 0.0);
  for (std::size_t t = 0; t < j_set.size(); ++t)
    x[j_set[t]] = inst.x0[j_set[t]] + correction[t] - tau * analysis.v[j_set[t]];
  if (!force) {
    for (std::size_t i : inst.support)
      if (sign_of(x[i]) != sign_of(inst.x0[i]))
        throw std::logic_error("predicted_noisy_solution: sign flipped inside the regime");
  }
  return x;
}

VerificationReport verify_prediction(const ProblemInstance& inst, const StabilityAnalysis& analysis,
                             const Vector& w, double tau, const SolverConfig& cfg) {
  VerificationReport rep;
  rep.x_pred = predicted_noisy_solution(inst, analysis, w, tau);
  Vector y = add(multiply(inst.phi, inst.x0), w);
  rep.kkt_residual = kkt_residual(rep.x_pred, analysis.cert.p, inst.phi, y, analysis.alpha, tau);
  rep.solver = solve_primal(inst.phi, y, analysis.alpha, tau, cfg);
  rep.predicted_support = analysis.cert.extended_support;
  if (rep.solver.status == SolveStatus::Optimal || rep.solver.status == SolveStatus::MaxIter) {
    rep.objective_gap = std::abs(norm_l1(rep.x_pred) - rep.solver.objective);
    double xs = std::max(1.0, norm_linf(rep.solver.primal));
    rep.solver_support = support(rep.solver.primal, 1e-9 * xs);
    rep.support_match = rep.solver_support == rep.predicted_support;
  }
  return rep;
}

}  // namespace supcert
