#include <algorithm>
#include <cmath>
#include <sstream>

#include "supcert/solver.hpp"

// Two-phase revised simplex over 0 <= x <= u with a dense basis inverse.
// Upper bounds keep the box-constrained encodings at one row per constraint.
// Bland's rule (default) guarantees termination; Dantzig is available for
// cross-checks.

namespace supcert {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIter: return "max_iter";
  }
  return "unknown";
}

std::string SolveResult::diagnostics_line() const {
  std::ostringstream os;
  os.precision(12);
  os << "status=" << to_string(status) << " objective=" << objective
     << " kkt_residual=" << kkt_residual << " iterations=" << iterations;
  return os.str();
}

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;
constexpr std::size_t kRefactorPeriod = 192;

enum class VarState : unsigned char { Basic, AtLower, AtUpper };

struct SimplexState {
  Matrix a;      // constraint matrix after row flips / row removal
  Vector b;
  Vector upper;  // per structural variable; artificials unbounded
  Vector flip;
  std::vector<std::size_t> row_origin;
  std::size_t nv = 0;

  std::vector<std::size_t> basis;      // column per row
  std::vector<VarState> state;         // per column (structural + artificial)
  std::vector<bool> art_retired;
  Matrix binv;
  Vector xb;

  std::size_t rows() const { return a.rows(); }
  std::size_t total_cols() const { return nv + rows(); }

  double upper_of(std::size_t j) const { return j < nv ? upper[j] : kInf; }

  void column_into(std::size_t j, Vector& col) const {
    std::fill(col.begin(), col.end(), 0.0);
    if (j < nv) {
      for (std::size_t i = 0; i < rows(); ++i) col[i] = a(i, j);
    } else {
      col[j - nv] = 1.0;
    }
  }

  // b minus the contribution of nonbasic-at-upper columns.
  Vector effective_rhs() const {
    Vector rhs = b;
    for (std::size_t j = 0; j < nv; ++j) {
      if (state[j] != VarState::AtUpper) continue;
      for (std::size_t i = 0; i < rows(); ++i) rhs[i] -= a(i, j) * upper[j];
    }
    return rhs;
  }

  void refactor() {
    std::size_t m = rows();
    Matrix bmat(m, m);
    Vector col(m);
    for (std::size_t l = 0; l < m; ++l) {
      column_into(basis[l], col);
      for (std::size_t i = 0; i < m; ++i) bmat(i, l) = col[i];
    }
    binv = invert_square(bmat);
    xb = multiply(binv, effective_rhs());
  }
};

struct Pricing {
  bool found = false;
  std::size_t col = 0;
  bool increase = true;  // direction of the entering variable
};

Pricing price(const SimplexState& st, const Vector& costs, bool allow_artificials,
              PivotRule rule) {
  std::size_t m = st.rows();
  Vector lambda(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t l = 0; l < m; ++l) s += costs[st.basis[l]] * st.binv(l, i);
    lambda[i] = s;
  }
  Vector z = multiply_transpose(st.a, lambda);

  Pricing r;
  double best = kReducedCostTol;
  std::size_t total = allow_artificials ? st.total_cols() : st.nv;
  for (std::size_t j = 0; j < total; ++j) {
    if (st.state[j] == VarState::Basic) continue;
    if (j >= st.nv && st.art_retired[j - st.nv]) continue;
    double d = costs[j] - (j < st.nv ? z[j] : lambda[j - st.nv]);
    double viol = st.state[j] == VarState::AtLower ? -d : d;
    if (viol > best) {
      r.found = true;
      r.col = j;
      r.increase = st.state[j] == VarState::AtLower;
      if (rule == PivotRule::Bland) return r;
      best = viol;
    }
  }
  return r;
}

struct Ratio {
  bool unbounded = false;
  bool bound_flip = false;
  std::size_t row = 0;
  bool leaving_to_upper = false;
  double theta = 0.0;
};

// Smallest step that hits a bound; ties resolved toward the smallest
// variable index so Bland's rule applies to degenerate steps as well.
Ratio ratio_test(const SimplexState& st, const Vector& dir, std::size_t entering, bool increase) {
  std::size_t m = st.rows();
  double sgn = increase ? 1.0 : -1.0;
  Ratio best;
  best.theta = st.upper_of(entering);
  best.bound_flip = std::isfinite(best.theta);
  best.unbounded = !best.bound_flip;
  std::size_t best_var = best.bound_flip ? entering : st.total_cols();

  for (std::size_t i = 0; i < m; ++i) {
    double w = sgn * dir[i];
    double theta;
    bool to_upper;
    if (w > kPivotTol) {
      theta = st.xb[i] / w;
      to_upper = false;
    } else if (w < -kPivotTol) {
      double u = st.upper_of(st.basis[i]);
      if (!std::isfinite(u)) continue;
      theta = (u - st.xb[i]) / (-w);
      to_upper = true;
    } else {
      continue;
    }
    if (theta < 0.0) theta = 0.0;
    double tol = 1e-9 * (1.0 + std::abs(best.unbounded ? theta : best.theta));
    bool better = best.unbounded || theta < best.theta - tol;
    bool tie = !best.unbounded && !better && theta <= best.theta + tol &&
               st.basis[i] < best_var;
    if (better || tie) {
      best.unbounded = false;
      best.bound_flip = false;
      best.row = i;
      best.leaving_to_upper = to_upper;
      best.theta = theta;
      best_var = st.basis[i];
    }
  }
  return best;
}

void apply_step(SimplexState& st, const Vector& dir, std::size_t entering, bool increase,
                const Ratio& r) {
  std::size_t m = st.rows();
  double sgn = increase ? 1.0 : -1.0;
  for (std::size_t i = 0; i < m; ++i) {
    st.xb[i] -= r.theta * sgn * dir[i];
    double u = st.upper_of(st.basis[i]);
    if (st.xb[i] < 0.0 && st.xb[i] > -1e-11) st.xb[i] = 0.0;
    if (std::isfinite(u) && st.xb[i] > u && st.xb[i] < u + 1e-11) st.xb[i] = u;
  }
  if (r.bound_flip) {
    st.state[entering] = increase ? VarState::AtUpper : VarState::AtLower;
    return;
  }
  // basis exchange at the blocking row
  double entering_value = increase ? r.theta : st.upper_of(entering) - r.theta;
  std::size_t leaving = st.basis[r.row];
  st.state[leaving] = r.leaving_to_upper ? VarState::AtUpper : VarState::AtLower;
  if (leaving >= st.nv) st.art_retired[leaving - st.nv] = true;
  st.state[entering] = VarState::Basic;
  st.basis[r.row] = entering;

  double piv = dir[r.row];
  for (std::size_t i = 0; i < m; ++i) {
    if (i == r.row) continue;
    double f = dir[i] / piv;
    if (f == 0.0) continue;
    for (std::size_t jj = 0; jj < m; ++jj) st.binv(i, jj) -= f * st.binv(r.row, jj);
  }
  for (std::size_t jj = 0; jj < m; ++jj) st.binv(r.row, jj) /= piv;
  st.xb[r.row] = entering_value;
}

SolveStatus iterate(SimplexState& st, const Vector& costs, bool allow_artificials,
                    const SolverConfig& cfg, std::size_t& iters) {
  std::size_t since_refactor = 0;
  Vector col(st.rows());
  while (true) {
    if (iters >= cfg.max_iterations) return SolveStatus::MaxIter;
    Pricing pr = price(st, costs, allow_artificials, cfg.lp_pivot_rule);
    if (!pr.found) return SolveStatus::Optimal;
    st.column_into(pr.col, col);
    Vector dir = multiply(st.binv, col);
    Ratio r = ratio_test(st, dir, pr.col, pr.increase);
    if (r.unbounded) return SolveStatus::Unbounded;
    apply_step(st, dir, pr.col, pr.increase, r);
    ++iters;
    if (++since_refactor >= kRefactorPeriod) {
      st.refactor();
      since_refactor = 0;
    }
  }
}

void clean_artificial_basis(SimplexState& st) {
  std::size_t m = st.rows();
  std::vector<bool> dead(m, false);
  bool removed_any = false;
  Vector col(m);
  for (std::size_t r = 0; r < m; ++r) {
    if (st.basis[r] < st.nv) continue;
    bool pivoted = false;
    for (std::size_t j = 0; j < st.nv && !pivoted; ++j) {
      if (st.state[j] == VarState::Basic) continue;
      st.column_into(j, col);
      Vector dir = multiply(st.binv, col);
      if (std::abs(dir[r]) > 1e-7) {
        // degenerate exchange: the artificial sits at zero, the entering
        // variable keeps its bound value; refactor restores consistency
        std::size_t leaving = st.basis[r];
        st.art_retired[leaving - st.nv] = true;
        st.state[leaving] = VarState::AtLower;
        st.state[j] = VarState::Basic;
        st.basis[r] = j;
        st.refactor();
        pivoted = true;
      }
    }
    if (!pivoted) {
      dead[r] = true;
      removed_any = true;
    }
  }
  if (!removed_any) return;

  SimplexState next;
  next.nv = st.nv;
  next.upper = st.upper;
  std::size_t kept = 0;
  for (std::size_t r = 0; r < m; ++r)
    if (!dead[r]) ++kept;
  next.a = Matrix(kept, st.nv);
  next.b = Vector(kept);
  next.flip = Vector(kept);
  next.row_origin.resize(kept);
  std::size_t out = 0;
  for (std::size_t r = 0; r < m; ++r) {
    if (dead[r]) continue;
    for (std::size_t j = 0; j < st.nv; ++j) next.a(out, j) = st.a(r, j);
    next.b[out] = st.b[r];
    next.flip[out] = st.flip[r];
    next.row_origin[out] = st.row_origin[r];
    next.basis.push_back(st.basis[r]);
    ++out;
  }
  for (std::size_t bcol : next.basis)
    if (bcol >= next.nv) throw std::logic_error("simplex: artificial survived row cleanup");
  next.state.assign(next.nv + kept, VarState::AtLower);
  for (std::size_t j = 0; j < next.nv; ++j) next.state[j] = st.state[j];
  next.art_retired.assign(kept, true);  // fresh slots are never eligible again
  next.refactor();
  st = std::move(next);
}

}  // namespace

LpSolution solve_lp(const LpProblem& lp, const SolverConfig& cfg) {
  std::size_t m = lp.a.rows();
  std::size_t nv = lp.a.cols();
  if (lp.b.size() != m || lp.c.size() != nv) throw std::invalid_argument("solve_lp: shape mismatch");
  if (!lp.upper.empty() && lp.upper.size() != nv)
    throw std::invalid_argument("solve_lp: upper bound size mismatch");
  if (!lp.a.all_finite() || !all_finite(lp.b) || !all_finite(lp.c))
    throw std::invalid_argument("solve_lp: non-finite input");

  SimplexState st;
  st.nv = nv;
  st.a = lp.a;
  st.b = lp.b;
  st.upper = lp.upper.empty() ? Vector(nv, kInf) : lp.upper;
  st.flip = Vector(m, 1.0);
  st.row_origin.resize(m);
  for (std::size_t i = 0; i < m; ++i) st.row_origin[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    if (st.b[i] < 0.0) {
      st.flip[i] = -1.0;
      st.b[i] = -st.b[i];
      for (std::size_t j = 0; j < nv; ++j) st.a(i, j) = -st.a(i, j);
    }
  }
  st.basis.resize(m);
  st.state.assign(nv + m, VarState::AtLower);
  for (std::size_t i = 0; i < m; ++i) {
    st.basis[i] = nv + i;
    st.state[nv + i] = VarState::Basic;
  }
  st.art_retired.assign(m, false);
  st.binv = Matrix::identity(m);
  st.xb = st.b;

  LpSolution sol;
  std::size_t iters = 0;

  Vector phase1_costs(nv + m, 0.0);
  for (std::size_t i = 0; i < m; ++i) phase1_costs[nv + i] = 1.0;
  SolveStatus s1 = iterate(st, phase1_costs, true, cfg, iters);
  if (s1 == SolveStatus::MaxIter) {
    sol.status = SolveStatus::MaxIter;
    sol.iterations = iters;
    return sol;
  }
  if (s1 == SolveStatus::Unbounded)
    throw std::logic_error("simplex: phase 1 reported unbounded");
  double art_sum = 0.0;
  for (std::size_t l = 0; l < st.rows(); ++l)
    if (st.basis[l] >= nv) art_sum += st.xb[l];
  double feas_tol = std::max(cfg.tolerance, 1e-9) * (1.0 + norm_linf(st.b));
  if (art_sum > feas_tol) {
    sol.status = SolveStatus::Infeasible;
    sol.iterations = iters;
    return sol;
  }
  clean_artificial_basis(st);

  Vector phase2_costs(nv + st.rows(), 0.0);
  for (std::size_t j = 0; j < nv; ++j) phase2_costs[j] = lp.c[j];
  SolveStatus s2 = iterate(st, phase2_costs, false, cfg, iters);
  st.refactor();

  sol.status = s2;
  sol.iterations = iters;
  sol.x.assign(nv, 0.0);
  for (std::size_t j = 0; j < nv; ++j)
    if (st.state[j] == VarState::AtUpper) sol.x[j] = st.upper[j];
  for (std::size_t l = 0; l < st.rows(); ++l)
    if (st.basis[l] < nv) sol.x[st.basis[l]] = std::max(0.0, st.xb[l]);
  sol.objective = dot(lp.c, sol.x);
  sol.dual.assign(m, 0.0);
  if (s2 == SolveStatus::Optimal) {
    std::size_t mr = st.rows();
    for (std::size_t i = 0; i < mr; ++i) {
      double s = 0.0;
      for (std::size_t l = 0; l < mr; ++l) s += phase2_costs[st.basis[l]] * st.binv(l, i);
      sol.dual[st.row_origin[i]] = st.flip[i] * s;
    }
  }
  return sol;
}

}  // namespace supcert
