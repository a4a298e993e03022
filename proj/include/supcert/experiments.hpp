#pragma once

#include <cstdint>
#include <iosfwd>

#include "supcert/rng.hpp"
#include "supcert/stability.hpp"

namespace supcert {

struct InstanceNotIdentifiable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::size_t n = 100;
  std::size_t m = 90;
  std::vector<std::size_t> k_values;   // sparsities to sweep
  std::size_t trials_per_k = 50;
  std::vector<double> inv_alpha_grid;  // 0 encodes alpha = inf
  std::vector<std::size_t> s_e_values; // support-excess thresholds
  std::uint64_t master_seed = 42;
  std::string output_path;
  std::size_t jobs = 1;
  // Exact (vertex/QP) certificate paths resolve saturation at lp_sat_tolerance;
  // the general-alpha first-order path is looser.
  double lp_sat_tolerance = 1e-7;
  double fo_tolerance = 1e-7;
  double fo_sat_tolerance = 1e-5;
  std::size_t fo_max_iterations = 80000;

  std::string summary() const;
};

ExperimentConfig desk_config();
ExperimentConfig full_scale_config();

struct PerAlphaResult {
  double inv_alpha = 0.0;
  std::optional<std::size_t> excess_size;  // null when unidentifiable or failed
  std::optional<bool> injective;           // only for alpha in {1, 2, inf}
  std::optional<double> mu;                // only for alpha = inf
  std::string error;
};

struct TrialRecord {
  std::uint64_t seed = 0;
  std::size_t k = 0;
  std::size_t trial = 0;
  bool identifiable = false;
  std::vector<PerAlphaResult> per_alpha;
};

// Deterministic given the master seed; per-trial failures are recorded in the
// per-alpha error field and never abort the sweep.
std::vector<TrialRecord> run_sweep(const ExperimentConfig& cfg);

struct CurveTable {
  std::vector<double> inv_alphas;
  std::vector<std::size_t> s_e_values;
  std::vector<std::size_t> k_values;
  std::size_t trials_per_k = 0;
  // prob[alpha][s_e][k]: empirical P(identifiable and excess <= s_e)
  std::vector<std::vector<std::vector<double>>> prob;
};

CurveTable probability_curves(const std::vector<TrialRecord>& records,
                              const std::vector<std::size_t>& s_e_values);

struct HeatmapGrid {
  std::size_t s_e = 0;
  std::vector<double> inv_alphas;
  std::vector<std::size_t> k_values;
  std::vector<std::vector<double>> prob;  // [alpha][k]
};

HeatmapGrid alpha_heatmap(const std::vector<TrialRecord>& records, std::size_t s_e);

// Largest k whose empirical probability stays >= 0.5, per grid row.
std::vector<std::size_t> heatmap_transition_k(const HeatmapGrid& grid);

struct ToyResult {
  std::uint64_t seed_used = 0;
  ProblemInstance inst;
  StabilityAnalysis analysis;  // sup-norm loss
  double delta = 0.0;
  Vector w;
  std::vector<double> tau_list;
  std::vector<SolveResult> solves;
  std::vector<IndexSet> supports;
  Vector eta;  // phi^T p, the support predictor
};

// Small single-instance trajectory (n=20, m=10, |I|=4): draws an instance,
// retries the next seeds when it is not identifiable, and tracks the solver
// solution across the tau list. Empty tau list picks four regime points.
ToyResult toy_trajectory(std::uint64_t seed, std::vector<double> tau_list,
                         const SolverConfig& cfg = {});

// ---- CSV emission ----------------------------------------------------------------

void write_records_csv(std::ostream& out, const std::vector<TrialRecord>& records,
                       const ExperimentConfig& cfg);
void write_curves_csv(std::ostream& out, const CurveTable& table, const ExperimentConfig& cfg);
void write_heatmap_csv(std::ostream& out, const HeatmapGrid& grid, const ExperimentConfig& cfg);
void write_toy_csv(std::ostream& out, const ToyResult& toy);

std::string format_alpha(double inv_alpha);

}  // namespace supcert
