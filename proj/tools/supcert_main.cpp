#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "supcert/experiments.hpp"
#include "supcert/serialize.hpp"
#include "supcert/version.hpp"

namespace {

using namespace supcert;

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitInput = 2;
constexpr int kExitInjectivity = 3;
constexpr int kExitRegime = 4;
constexpr int kExitSolver = 5;

double parse_alpha(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "1") return 1.0;
  if (s == "2") return 2.0;
  throw CLI::ValidationError("--alpha", "alpha must be 1, 2, or inf");
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t colon = item.find(':');
    if (colon != std::string::npos) {
      // a:b:step range
      std::size_t colon2 = item.find(':', colon + 1);
      double a = std::stod(item.substr(0, colon));
      double b = std::stod(item.substr(colon + 1, colon2 - colon - 1));
      double step = colon2 == std::string::npos ? 1.0 : std::stod(item.substr(colon2 + 1));
      for (double v = a; v <= b + 1e-12; v += step) out.push_back(v);
    } else {
      out.push_back(std::stod(item));
    }
  }
  return out;
}

Vector load_noise(const std::string& noise_file, double noise_uniform, std::uint64_t seed,
                  std::size_t m) {
  if (!noise_file.empty()) {
    Vector w = read_vector_file(noise_file);
    if (w.size() != m) throw ParseError("noise vector length mismatch");
    return w;
  }
  if (noise_uniform > 0.0) {
    SeededRng rng(seed);
    return uniform_noise(m, noise_uniform, rng);
  }
  return Vector(m, 0.0);
}

ExperimentConfig load_sweep_config(const std::string& spec_text) {
  if (spec_text.empty() || spec_text == "desk") return desk_config();
  if (spec_text == "full_scale") return full_scale_config();
  std::ifstream in(spec_text);
  if (!in) throw ParseError("cannot open config " + spec_text);
  ExperimentConfig cfg = desk_config();
  cfg.k_values.clear();
  cfg.inv_alpha_grid.clear();
  cfg.s_e_values.clear();
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) continue;
    if (key == "base") {
      std::vector<std::size_t> k = cfg.k_values;
      cfg = value == "full_scale" ? full_scale_config() : desk_config();
      cfg.k_values = k.empty() ? cfg.k_values : k;
    } else if (key == "n") {
      cfg.n = std::stoul(value);
    } else if (key == "m") {
      cfg.m = std::stoul(value);
    } else if (key == "trials_per_k") {
      cfg.trials_per_k = std::stoul(value);
    } else if (key == "master_seed") {
      cfg.master_seed = std::stoull(value);
    } else if (key == "jobs") {
      cfg.jobs = std::stoul(value);
    } else if (key == "k_values") {
      for (double v : parse_double_list(value)) cfg.k_values.push_back(static_cast<std::size_t>(v));
    } else if (key == "inv_alpha_grid") {
      cfg.inv_alpha_grid = parse_double_list(value);
    } else if (key == "s_e_values") {
      for (double v : parse_double_list(value)) cfg.s_e_values.push_back(static_cast<std::size_t>(v));
    } else if (key == "fo_tolerance") {
      cfg.fo_tolerance = std::stod(value);
    } else if (key == "fo_sat_tolerance") {
      cfg.fo_sat_tolerance = std::stod(value);
    } else if (key == "lp_sat_tolerance") {
      cfg.lp_sat_tolerance = std::stod(value);
    } else if (key == "fo_max_iterations") {
      cfg.fo_max_iterations = std::stoul(value);
    } else {
      throw ParseError("unknown config key: " + key);
    }
  }
  if (cfg.k_values.empty()) cfg.k_values = desk_config().k_values;
  if (cfg.inv_alpha_grid.empty()) cfg.inv_alpha_grid = desk_config().inv_alpha_grid;
  if (cfg.s_e_values.empty()) cfg.s_e_values = desk_config().s_e_values;
  return cfg;
}

struct CommonOptions {
  double tolerance = 1e-9;
  double sat_tolerance = kDefaultSatTol;
  double support_tolerance = 0.0;
};

SolverConfig make_solver_config(const CommonOptions& opt) {
  SolverConfig cfg;
  cfg.tolerance = opt.tolerance;
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"support stability certification for l1 regression with l-alpha losses"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  CommonOptions opt;

  // certify
  auto* certify = app.add_subcommand("certify", "test identifiability of a signal");
  std::string matrix_file, signal_file;
  certify->add_option("matrix", matrix_file, "design matrix file")->required();
  certify->add_option("signal", signal_file, "signal vector file")->required();
  certify->add_option("--support-tolerance", opt.support_tolerance, "support threshold for x0");
  certify->add_option("--tolerance", opt.tolerance, "solver tolerance");

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "compute certificate, multipliers and constants");
  std::string alpha_text = "inf", out_path = "analysis.json";
  analyze_cmd->add_option("matrix", matrix_file, "design matrix file")->required();
  analyze_cmd->add_option("signal", signal_file, "signal vector file")->required();
  analyze_cmd->add_option("--alpha", alpha_text, "loss index: 1, 2, or inf")->required();
  analyze_cmd->add_option("-o,--output", out_path, "analysis file to write");
  analyze_cmd->add_option("--sat-tolerance", opt.sat_tolerance, "saturation tolerance for J");
  analyze_cmd->add_option("--support-tolerance", opt.support_tolerance, "support threshold for x0");
  analyze_cmd->add_option("--tolerance", opt.tolerance, "solver tolerance");

  // predict
  auto* predict = app.add_subcommand("predict", "closed-form solution in the small-noise regime");
  std::string analysis_path, noise_file, solution_path = "solution.txt";
  double tau = 0.0, noise_uniform = 0.0;
  std::uint64_t seed = 1;
  bool force = false;
  predict->add_option("analysis", analysis_path, "analysis file from 'analyze'")->required();
  predict->add_option("--tau", tau, "constraint size")->required();
  predict->add_option("--noise-file", noise_file, "noise vector file");
  predict->add_option("--noise-uniform", noise_uniform, "uniform noise half-width");
  predict->add_option("--seed", seed, "seed for --noise-uniform");
  predict->add_option("-o,--output", solution_path, "solution vector file to write");
  predict->add_flag("--force", force, "skip the noise-regime guard");

  // verify
  auto* verify = app.add_subcommand("verify", "cross-check the prediction against the solver");
  double check_tolerance = 1e-6;
  verify->add_option("analysis", analysis_path, "analysis file from 'analyze'")->required();
  verify->add_option("--tau", tau, "constraint size")->required();
  verify->add_option("--noise-file", noise_file, "noise vector file");
  verify->add_option("--noise-uniform", noise_uniform, "uniform noise half-width");
  verify->add_option("--seed", seed, "seed for --noise-uniform");
  verify->add_option("--check-tolerance", check_tolerance, "pass threshold for residual and gap");
  verify->add_option("--tolerance", opt.tolerance, "solver tolerance");

  // toy
  auto* toy_cmd = app.add_subcommand("toy", "single-instance trajectory across tau");
  std::string tau_list_text, toy_out = "toy.csv";
  std::uint64_t toy_seed = 1;
  toy_cmd->add_option("--seed", toy_seed, "instance seed (next seeds tried if unidentifiable)");
  toy_cmd->add_option("--tau-list", tau_list_text, "comma list of tau values");
  toy_cmd->add_option("-o,--output", toy_out, "trajectory csv");
  toy_cmd->add_option("--tolerance", opt.tolerance, "solver tolerance");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over sparsity and loss index");
  std::string config_text = "desk", sweep_out = "sweep_out";
  std::size_t jobs = 1;
  bool has_seed = false;
  std::uint64_t sweep_seed = 0;
  std::string inv_alpha_text;
  sweep->add_option("--config", config_text, "desk, full_scale, or a key=value file");
  sweep->add_option("-o,--output", sweep_out, "output directory");
  sweep->add_option("--jobs", jobs, "worker threads");
  sweep->add_option("--inv-alpha", inv_alpha_text, "comma list of 1/alpha grid values (0 = inf)");
  sweep->add_option("--seed", sweep_seed, "master seed override")->each([&](const std::string&) {
    has_seed = true;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  SolverConfig scfg = make_solver_config(opt);

  if (*certify) {
    ProblemInstance inst = make_instance(read_matrix_file(matrix_file),
                                         read_vector_file(signal_file), opt.support_tolerance);
    auto [ok, cert] = is_identifiable(inst, scfg);
    std::cout << "identifiable: " << (ok ? "true" : "false") << "\n";
    if (ok && cert) std::cout << certificate_to_text(*cert);
    return ok ? kExitOk : kExitNegative;
  }

  if (*analyze_cmd) {
    double alpha = parse_alpha(alpha_text);
    ProblemInstance inst = make_instance(read_matrix_file(matrix_file),
                                         read_vector_file(signal_file), opt.support_tolerance);
    StabilityAnalysis a = analyze(inst, alpha, scfg, opt.sat_tolerance);
    write_analysis_file(out_path, inst, a);
    std::cout.precision(12);
    std::cout << "alpha: " << alpha_text << "\n";
    std::cout << "support I:";
    for (std::size_t i : inst.support) std::cout << " " << i;
    std::cout << "\nextended support J:";
    for (std::size_t j : a.cert.extended_support) std::cout << " " << j;
    std::cout << "\nsupport excess:";
    for (std::size_t j : a.cert.support_excess) std::cout << " " << j;
    std::cout << "\nconstants: a=" << a.constants.a << " b=" << a.constants.b
              << " nu=" << a.constants.nu;
    if (a.constants.mu) std::cout << " mu=" << *a.constants.mu;
    if (a.constants.v_under) std::cout << " v_under=" << *a.constants.v_under;
    if (a.constants.z_under) std::cout << " z_under=" << *a.constants.z_under;
    std::cout << " c1=" << a.constants.c1 << " c2=" << a.constants.c2 << "\n";
    if (a.constants.derived)
      std::cout << "note: l2-loss constants use a derived bound; the verify command is the ground truth\n";
    std::cout << "x_under=" << a.x_under << " tau_max=" << a.tau_max_noiseless << "\n";
    if (alpha == 1.0 || std::isinf(alpha)) {
      bool stable = certificate_j_is_pivot_stable(inst, alpha, scfg, opt.sat_tolerance);
      std::cout << "J pivot-rule stable: " << (stable ? "yes" : "no (certificate non-unique)")
                << "\n";
    }
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
  }

  if (*predict) {
    AnalysisRecord rec = read_analysis_file(analysis_path);
    Vector w = load_noise(noise_file, noise_uniform, seed, rec.inst.phi.rows());
    Vector x = predicted_noisy_solution(rec.inst, rec.analysis, w, tau, force);
    std::ofstream out(solution_path);
    if (!out) throw ParseError("cannot open " + solution_path + " for writing");
    write_vector(out, x);
    double xs = std::max(1.0, norm_linf(x));
    IndexSet supp = support(x, 1e-12 * xs);
    std::ofstream supp_out(solution_path + ".support");
    for (std::size_t i = 0; i < supp.size(); ++i) supp_out << (i ? " " : "") << supp[i];
    supp_out << "\n";
    std::cout << "predicted support:";
    for (std::size_t i : supp) std::cout << " " << i;
    std::cout << "\nwrote " << solution_path << " and " << solution_path << ".support\n";
    return kExitOk;
  }

  if (*verify) {
    AnalysisRecord rec = read_analysis_file(analysis_path);
    Vector w = load_noise(noise_file, noise_uniform, seed, rec.inst.phi.rows());
    VerificationReport rep = verify_prediction(rec.inst, rec.analysis, w, tau, scfg);
    if (rep.solver.status != SolveStatus::Optimal) {
      std::cout << "solver failure: " << rep.solver.diagnostics_line() << "\n";
      return kExitSolver;
    }
    std::cout.precision(12);
    std::cout << "kkt_residual=" << rep.kkt_residual << "\n";
    std::cout << "objective_gap=" << rep.objective_gap << "\n";
    std::cout << "support_match=" << (rep.support_match ? "true" : "false") << "\n";
    std::cout << "solver: " << rep.solver.diagnostics_line() << "\n";
    bool pass = rep.kkt_residual <= check_tolerance && rep.objective_gap <= check_tolerance;
    return pass ? kExitOk : kExitNegative;
  }

  if (*toy_cmd) {
    std::vector<double> taus = tau_list_text.empty() ? std::vector<double>{}
                                                     : parse_double_list(tau_list_text);
    ToyResult toy = toy_trajectory(toy_seed, taus, scfg);
    std::ofstream out(toy_out);
    if (!out) throw ParseError("cannot open " + toy_out + " for writing");
    write_toy_csv(out, toy);
    std::cout.precision(12);
    std::cout << "seed_used=" << toy.seed_used << " delta=" << toy.delta << "\n";
    std::cout << "extended support J:";
    for (std::size_t j : toy.analysis.cert.extended_support) std::cout << " " << j;
    std::cout << "\n";
    for (std::size_t t = 0; t < toy.tau_list.size(); ++t) {
      std::cout << "tau=" << toy.tau_list[t] << " supp(x_tau):";
      for (std::size_t i : toy.supports[t]) std::cout << " " << i;
      std::cout << "\n";
    }
    std::cout << "wrote " << toy_out << "\n";
    return kExitOk;
  }

  if (*sweep) {
    ExperimentConfig cfg = load_sweep_config(config_text);
    cfg.jobs = jobs;
    if (has_seed) cfg.master_seed = sweep_seed;
    if (!inv_alpha_text.empty()) cfg.inv_alpha_grid = parse_double_list(inv_alpha_text);
    std::filesystem::create_directories(sweep_out);
    std::vector<TrialRecord> records = run_sweep(cfg);
    {
      std::ofstream out(sweep_out + "/records.csv");
      write_records_csv(out, records, cfg);
    }
    CurveTable curves = probability_curves(records, cfg.s_e_values);
    {
      std::ofstream out(sweep_out + "/curves.csv");
      write_curves_csv(out, curves, cfg);
    }
    for (std::size_t s : cfg.s_e_values) {
      HeatmapGrid grid = alpha_heatmap(records, s);
      std::ofstream out(sweep_out + "/heatmap_se" + std::to_string(s) + ".csv");
      write_heatmap_csv(out, grid, cfg);
    }
    std::cout << "sweep complete: " << records.size() << " trials, wrote " << sweep_out << "\n";
    return kExitOk;
  }

  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const supcert::NotIdentifiable& e) {
    std::cerr << "not identifiable: " << e.what() << "\n";
    return kExitNegative;
  } catch (const supcert::NotInjective& e) {
    std::cerr << "injectivity failure: " << e.what() << "\n";
    return kExitInjectivity;
  } catch (const supcert::MuDegenerate& e) {
    std::cerr << "degenerate constants: " << e.what() << "\n";
    return kExitInjectivity;
  } catch (const supcert::NoiseRegimeViolated& e) {
    std::cerr << "noise regime violated: " << e.what() << "\n";
    return kExitRegime;
  } catch (const supcert::TauOutOfRange& e) {
    std::cerr << "tau out of range: " << e.what() << "\n";
    return kExitRegime;
  } catch (const supcert::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
