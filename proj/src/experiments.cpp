#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <sstream>
#include <thread>

#include "supcert/experiments.hpp"
#include "supcert/version.hpp"

namespace supcert {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string format_alpha(double inv_alpha) {
  if (inv_alpha == 0.0) return "inf";
  double alpha = 1.0 / inv_alpha;
  if (alpha == 1.0) return "1";
  if (alpha == 2.0) return "2";
  std::ostringstream os;
  os.precision(12);
  os << alpha;
  return os.str();
}

std::string ExperimentConfig::summary() const {
  std::ostringstream os;
  os << "n=" << n << " m=" << m << " trials_per_k=" << trials_per_k
     << " master_seed=" << master_seed << " k=[";
  for (std::size_t i = 0; i < k_values.size(); ++i) os << (i ? " " : "") << k_values[i];
  os << "] inv_alpha=[";
  for (std::size_t i = 0; i < inv_alpha_grid.size(); ++i) os << (i ? " " : "") << inv_alpha_grid[i];
  os << "] s_e=[";
  for (std::size_t i = 0; i < s_e_values.size(); ++i) os << (i ? " " : "") << s_e_values[i];
  os << "] fo_tol=" << fo_tolerance << " fo_sat_tol=" << fo_sat_tolerance;
  return os.str();
}

ExperimentConfig desk_config() {
  ExperimentConfig cfg;
  cfg.n = 100;
  cfg.m = 90;
  for (std::size_t k = 2; k <= 60; k += 2) cfg.k_values.push_back(k);
  cfg.trials_per_k = 50;
  for (int i = 0; i <= 10; ++i) cfg.inv_alpha_grid.push_back(i / 10.0);
  cfg.s_e_values = {0, 10, 20};
  cfg.master_seed = 42;
  return cfg;
}

ExperimentConfig full_scale_config() {
  ExperimentConfig cfg;
  cfg.n = 1000;
  cfg.m = 900;
  for (std::size_t k = 10; k <= 600; k += 10) cfg.k_values.push_back(k);
  cfg.trials_per_k = 200;
  for (int i = 0; i <= 40; ++i) cfg.inv_alpha_grid.push_back(i / 40.0);
  cfg.s_e_values = {0, 10, 20, 30};
  cfg.master_seed = 42;
  return cfg;
}

namespace {

// One (phi, x0) draw with every requested certificate; failures downgrade to
// logged per-alpha errors.
TrialRecord run_trial(const ExperimentConfig& cfg, std::size_t k_index, std::size_t trial) {
  TrialRecord rec;
  rec.k = cfg.k_values[k_index];
  rec.trial = trial;
  rec.seed = derive_seed(cfg.master_seed, k_index, trial);
  rec.per_alpha.resize(cfg.inv_alpha_grid.size());
  for (std::size_t a = 0; a < cfg.inv_alpha_grid.size(); ++a)
    rec.per_alpha[a].inv_alpha = cfg.inv_alpha_grid[a];

  SeededRng rng(rec.seed);
  Matrix phi = gaussian_design(cfg.m, cfg.n, rng);
  Vector x0 = rademacher_signal(cfg.n, rec.k, rng);
  ProblemInstance inst = make_instance(std::move(phi), std::move(x0));

  SolverConfig exact_cfg;
  SolverConfig fo_cfg;
  fo_cfg.tolerance = cfg.fo_tolerance;
  fo_cfg.max_iterations = cfg.fo_max_iterations;

  // Identifiability and the beta = 1 certificate come from the same LP.
  std::optional<Certificate> cert1;
  try {
    cert1 = min_norm_certificate(inst, kInf, exact_cfg, cfg.lp_sat_tolerance);
    rec.identifiable = true;
  } catch (const NotIdentifiable&) {
    rec.identifiable = false;
    return rec;
  }

  std::optional<Certificate> cert2;  // also the warm start for the general path
  Vector warm = cert1->p;

  auto fill = [&](PerAlphaResult& out, const Certificate& cert, double alpha) {
    if (cert.solver_status != SolveStatus::Optimal) {
      out.error = "solver: " + to_string(cert.solver_status) +
                  " residual=" + fmt(cert.solve_residual);
      return;
    }
    out.excess_size = cert.support_excess.size();
    if (alpha == 1.0 || alpha == 2.0 || std::isinf(alpha)) {
      InjectivityResult inj = injectivity_check(cert, inst.phi);
      out.injective = inj.injective;
      if (std::isinf(alpha) && inj.injective) {
        try {
          Vector v = multipliers(cert, inst.phi, inj.restricted_inverse);
          Vector phi_v = multiply(inst.phi, v);
          double mu = 0.0;
          IndexSet sc = complement(*cert.p_support, inst.phi.rows());
          for (std::size_t i : sc) mu = std::max(mu, std::abs(phi_v[i]));
          out.mu = mu;
        } catch (const std::exception& e) {
          out.error = e.what();
        }
      }
    }
  };

  // Exact grid points first so the first-order sweep can chain warm starts
  // outward from the l2 certificate.
  for (std::size_t a = 0; a < cfg.inv_alpha_grid.size(); ++a) {
    double inv = cfg.inv_alpha_grid[a];
    PerAlphaResult& out = rec.per_alpha[a];
    try {
      if (inv == 0.0) {
        fill(out, *cert1, kInf);
      } else if (inv == 1.0) {
        Certificate c = min_norm_certificate(inst, 1.0, exact_cfg, cfg.lp_sat_tolerance);
        fill(out, c, 1.0);
      } else if (inv == 0.5) {
        cert2 = min_norm_certificate(inst, 2.0, exact_cfg, cfg.lp_sat_tolerance, &cert1->p);
        fill(out, *cert2, 2.0);
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  }
  if (!cert2) {
    try {
      cert2 = min_norm_certificate(inst, 2.0, exact_cfg, cfg.lp_sat_tolerance, &cert1->p);
    } catch (const std::exception&) {
      // keep the beta = 1 warm start
    }
  }
  if (cert2 && cert2->solver_status == SolveStatus::Optimal) warm = cert2->p;

  std::vector<std::size_t> general;
  for (std::size_t a = 0; a < cfg.inv_alpha_grid.size(); ++a) {
    double inv = cfg.inv_alpha_grid[a];
    if (inv != 0.0 && inv != 0.5 && inv != 1.0) general.push_back(a);
  }
  std::stable_sort(general.begin(), general.end(), [&](std::size_t x, std::size_t y) {
    return std::abs(cfg.inv_alpha_grid[x] - 0.5) < std::abs(cfg.inv_alpha_grid[y] - 0.5);
  });
  Vector warm_mult = cert2 && cert2->solver_status == SolveStatus::Optimal
                         ? cert2->multiplier
                         : Vector{};
  Vector warm_low = warm, warm_high = warm;
  Vector mult_low = warm_mult, mult_high = warm_mult;
  for (std::size_t a : general) {
    double inv = cfg.inv_alpha_grid[a];
    double alpha = 1.0 / inv;
    Vector& chain = inv < 0.5 ? warm_low : warm_high;
    Vector& mult = inv < 0.5 ? mult_low : mult_high;
    PerAlphaResult& out = rec.per_alpha[a];
    try {
      Certificate c = min_norm_certificate(inst, alpha, fo_cfg, cfg.fo_sat_tolerance, &chain,
                                           mult.empty() ? nullptr : &mult);
      fill(out, c, alpha);
      if (c.solver_status == SolveStatus::Optimal) {
        chain = c.p;
        mult = c.multiplier;
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  }
  return rec;
}

}  // namespace

std::vector<TrialRecord> run_sweep(const ExperimentConfig& cfg) {
  if (cfg.m > cfg.n) throw std::invalid_argument("run_sweep: m must be <= n");
  if (cfg.trials_per_k < 1) throw std::invalid_argument("run_sweep: trials_per_k must be >= 1");
  for (std::size_t k : cfg.k_values)
    if (k > cfg.n) throw std::invalid_argument("run_sweep: k exceeds n");

  std::size_t total = cfg.k_values.size() * cfg.trials_per_k;
  std::vector<TrialRecord> records(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t t = next.fetch_add(1);
      if (t >= total) break;
      std::size_t k_index = t / cfg.trials_per_k;
      std::size_t trial = t % cfg.trials_per_k;
      records[t] = run_trial(cfg, k_index, trial);
    }
  };
  std::size_t jobs = std::max<std::size_t>(1, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

CurveTable probability_curves(const std::vector<TrialRecord>& records,
                              const std::vector<std::size_t>& s_e_values) {
  if (records.empty()) throw std::invalid_argument("probability_curves: no records");
  CurveTable t;
  t.s_e_values = s_e_values;
  for (const auto& r : records)
    if (std::find(t.k_values.begin(), t.k_values.end(), r.k) == t.k_values.end())
      t.k_values.push_back(r.k);
  std::sort(t.k_values.begin(), t.k_values.end());
  for (const auto& pa : records.front().per_alpha) t.inv_alphas.push_back(pa.inv_alpha);

  std::vector<std::vector<std::vector<std::size_t>>> hits(
      t.inv_alphas.size(),
      std::vector<std::vector<std::size_t>>(s_e_values.size(),
                                            std::vector<std::size_t>(t.k_values.size(), 0)));
  std::vector<std::size_t> totals(t.k_values.size(), 0);
  for (const auto& r : records) {
    std::size_t ki =
        std::find(t.k_values.begin(), t.k_values.end(), r.k) - t.k_values.begin();
    ++totals[ki];
    for (std::size_t a = 0; a < r.per_alpha.size(); ++a) {
      const auto& pa = r.per_alpha[a];
      if (!r.identifiable || !pa.excess_size) continue;
      for (std::size_t s = 0; s < s_e_values.size(); ++s)
        if (*pa.excess_size <= s_e_values[s]) ++hits[a][s][ki];
    }
  }
  t.trials_per_k = totals.empty() ? 0 : totals[0];
  t.prob.assign(t.inv_alphas.size(),
                std::vector<std::vector<double>>(s_e_values.size(),
                                                 std::vector<double>(t.k_values.size(), 0.0)));
  for (std::size_t a = 0; a < t.inv_alphas.size(); ++a)
    for (std::size_t s = 0; s < s_e_values.size(); ++s)
      for (std::size_t ki = 0; ki < t.k_values.size(); ++ki)
        t.prob[a][s][ki] = totals[ki] ? static_cast<double>(hits[a][s][ki]) / totals[ki] : 0.0;
  return t;
}

HeatmapGrid alpha_heatmap(const std::vector<TrialRecord>& records, std::size_t s_e) {
  CurveTable t = probability_curves(records, {s_e});
  HeatmapGrid g;
  g.s_e = s_e;
  g.inv_alphas = t.inv_alphas;
  g.k_values = t.k_values;
  g.prob.resize(t.inv_alphas.size());
  for (std::size_t a = 0; a < t.inv_alphas.size(); ++a) g.prob[a] = t.prob[a][0];
  return g;
}

std::vector<std::size_t> heatmap_transition_k(const HeatmapGrid& grid) {
  std::vector<std::size_t> out(grid.inv_alphas.size(), 0);
  for (std::size_t a = 0; a < grid.inv_alphas.size(); ++a)
    for (std::size_t ki = 0; ki < grid.k_values.size(); ++ki)
      if (grid.prob[a][ki] >= 0.5) out[a] = std::max(out[a], grid.k_values[ki]);
  return out;
}

ToyResult toy_trajectory(std::uint64_t seed, std::vector<double> tau_list, const SolverConfig& cfg) {
  constexpr std::size_t kN = 20, kM = 10, kSparsity = 4;
  constexpr int kMaxAttempts = 50;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    SeededRng rng(s);
    Matrix phi = gaussian_design(kM, kN, rng);
    Vector x0 = rademacher_signal(kN, kSparsity, rng);
    ProblemInstance inst = make_instance(std::move(phi), std::move(x0));
    StabilityAnalysis analysis;
    try {
      analysis = analyze(inst, kInf, cfg);
    } catch (const std::exception&) {
      continue;  // redraw with the next seed
    }
    ToyResult toy;
    toy.seed_used = s;
    toy.analysis = std::move(analysis);
    toy.tau_list = tau_list;
    if (toy.tau_list.empty()) {
      double tmax = toy.analysis.constants.c2 * toy.analysis.x_under;
      toy.tau_list = {0.25 * tmax, 0.5 * tmax, 0.75 * tmax, tmax};
    }
    double tau_min = *std::min_element(toy.tau_list.begin(), toy.tau_list.end());
    toy.delta = 0.9 * toy.analysis.constants.c1 * tau_min;
    toy.w = uniform_noise(kM, toy.delta, rng);
    Vector y = add(multiply(inst.phi, inst.x0), toy.w);
    for (double tau : toy.tau_list) {
      SolveResult r = solve_primal(inst.phi, y, kInf, tau, cfg);
      double xs = std::max(1.0, norm_linf(r.primal));
      toy.supports.push_back(support(r.primal, 1e-9 * xs));
      toy.solves.push_back(std::move(r));
    }
    toy.eta = multiply_transpose(inst.phi, toy.analysis.cert.p);
    toy.inst = std::move(inst);
    return toy;
  }
  throw InstanceNotIdentifiable("toy_trajectory: no identifiable instance within 50 seeds");
}

namespace {

void header_comment(std::ostream& out, const std::string& what, const std::string& detail) {
  out << "# " << kToolName << " " << kToolVersion << " " << what << " " << detail << "\n";
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                       const ExperimentConfig& cfg) {
  header_comment(out, "records", cfg.summary());
  out << "seed,k,identifiable,alpha,inv_alpha,excess_size,injective,mu\n";
  for (const auto& r : records) {
    for (const auto& pa : r.per_alpha) {
      out << r.seed << "," << r.k << "," << (r.identifiable ? 1 : 0) << ","
          << format_alpha(pa.inv_alpha) << "," << fmt(pa.inv_alpha) << ",";
      if (pa.excess_size) out << *pa.excess_size;
      out << ",";
      if (pa.injective) out << (*pa.injective ? 1 : 0);
      out << ",";
      if (pa.mu) out << fmt(*pa.mu);
      out << "\n";
    }
  }
}

void write_curves_csv(std::ostream& out, const CurveTable& t, const ExperimentConfig& cfg) {
  header_comment(out, "curves", cfg.summary());
  out << "k";
  for (std::size_t a = 0; a < t.inv_alphas.size(); ++a)
    for (std::size_t s = 0; s < t.s_e_values.size(); ++s)
      out << ",p_ia" << t.inv_alphas[a] << "_se" << t.s_e_values[s];
  out << "\n";
  for (std::size_t ki = 0; ki < t.k_values.size(); ++ki) {
    out << t.k_values[ki];
    for (std::size_t a = 0; a < t.inv_alphas.size(); ++a)
      for (std::size_t s = 0; s < t.s_e_values.size(); ++s) out << "," << fmt(t.prob[a][s][ki]);
    out << "\n";
  }
}

void write_heatmap_csv(std::ostream& out, const HeatmapGrid& g, const ExperimentConfig& cfg) {
  header_comment(out, "heatmap s_e=" + std::to_string(g.s_e), cfg.summary());
  out << "inv_alpha";
  for (std::size_t k : g.k_values) out << ",k" << k;
  out << "\n";
  for (std::size_t a = 0; a < g.inv_alphas.size(); ++a) {
    out << fmt(g.inv_alphas[a]);
    for (std::size_t ki = 0; ki < g.k_values.size(); ++ki) out << "," << fmt(g.prob[a][ki]);
    out << "\n";
  }
}

void write_toy_csv(std::ostream& out, const ToyResult& toy) {
  std::ostringstream detail;
  detail.precision(17);
  detail << "seed=" << toy.seed_used << " delta=" << toy.delta << " c1=" << toy.analysis.constants.c1
         << " c2=" << toy.analysis.constants.c2 << " tau=[";
  for (std::size_t i = 0; i < toy.tau_list.size(); ++i) detail << (i ? " " : "") << toy.tau_list[i];
  detail << "]";
  header_comment(out, "toy", detail.str());
  out << "index,x0,eta";
  for (double tau : toy.tau_list) out << ",x_tau" << tau;
  out << "\n";
  for (std::size_t i = 0; i < toy.inst.x0.size(); ++i) {
    out << i << "," << fmt(toy.inst.x0[i]) << "," << fmt(toy.eta[i]);
    for (const auto& s : toy.solves) out << "," << fmt(s.primal[i]);
    out << "\n";
  }
}

}  // namespace supcert
