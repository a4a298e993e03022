#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "supcert/serialize.hpp"
#include "supcert/version.hpp"

namespace supcert {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& a) {
  return json{{"rows", a.rows()}, {"cols", a.cols()}, {"data", a.data()}};
}

Matrix matrix_from_json(const json& j) {
  Matrix a(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  a.data() = j.at("data").get<std::vector<double>>();
  if (a.data().size() != a.rows() * a.cols()) throw ParseError("matrix json: size mismatch");
  return a;
}

std::string alpha_label(double alpha) {
  if (std::isinf(alpha)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << alpha;
  return os.str();
}

double alpha_from_label(const std::string& s) {
  if (s == "inf") return kInf;
  return std::stod(s);
}

json opt_to_json(const std::optional<double>& v) {
  if (!v || std::isinf(*v)) return nullptr;
  return *v;
}

std::optional<double> opt_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json index_set_to_json(const IndexSet& s) { return json(s); }

}  // namespace

std::string analysis_to_json(const ProblemInstance& inst, const StabilityAnalysis& a) {
  json j;
  j["tool"] = kToolName;
  j["version"] = kToolVersion;
  j["kind"] = "analysis";
  j["alpha"] = alpha_label(a.alpha);
  j["phi"] = matrix_to_json(inst.phi);
  j["x0"] = inst.x0;
  j["support"] = index_set_to_json(inst.support);
  j["signs"] = inst.signs;

  json c;
  c["beta"] = alpha_label(a.cert.beta);
  c["p"] = a.cert.p;
  c["J"] = index_set_to_json(a.cert.extended_support);
  c["J_excess"] = index_set_to_json(a.cert.support_excess);
  c["S"] = a.cert.p_support ? json(*a.cert.p_support) : json(nullptr);
  c["Z"] = a.cert.p_saturation ? json(*a.cert.p_saturation) : json(nullptr);
  c["sat_tolerance"] = a.cert.sat_tolerance;
  c["norm"] = a.cert.norm;
  c["status"] = to_string(a.cert.solver_status);
  c["solve_residual"] = a.cert.solve_residual;
  c["multiplier"] = a.cert.multiplier;
  j["certificate"] = c;

  j["injective"] = a.injective;
  j["restricted_inverse"] = matrix_to_json(a.restricted_inverse);
  j["v"] = a.v;

  json k;
  k["a"] = a.constants.a;
  k["b"] = a.constants.b;
  k["nu"] = a.constants.nu;
  k["mu"] = opt_to_json(a.constants.mu);
  k["v_under"] = opt_to_json(a.constants.v_under);
  k["z_under"] = opt_to_json(a.constants.z_under);
  k["margin"] = opt_to_json(a.constants.margin);
  k["corr"] = opt_to_json(a.constants.corr);
  k["c1"] = a.constants.c1;
  k["c2"] = a.constants.c2;
  k["derived"] = a.constants.derived;
  j["constants"] = k;

  j["x_under"] = a.x_under;
  if (std::isfinite(a.tau_max_noiseless)) j["tau_max_noiseless"] = a.tau_max_noiseless;
  return j.dump(2);
}

AnalysisRecord analysis_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("analysis json: ") + e.what());
  }
  try {
    AnalysisRecord rec;
    rec.inst.phi = matrix_from_json(j.at("phi"));
    rec.inst.x0 = j.at("x0").get<Vector>();
    rec.inst.support = j.at("support").get<IndexSet>();
    rec.inst.signs = j.at("signs").get<Vector>();

    StabilityAnalysis& a = rec.analysis;
    a.alpha = alpha_from_label(j.at("alpha").get<std::string>());
    const json& c = j.at("certificate");
    a.cert.beta = alpha_from_label(c.at("beta").get<std::string>());
    a.cert.p = c.at("p").get<Vector>();
    a.cert.extended_support = c.at("J").get<IndexSet>();
    a.cert.support_excess = c.at("J_excess").get<IndexSet>();
    if (!c.at("S").is_null()) a.cert.p_support = c.at("S").get<IndexSet>();
    if (!c.at("Z").is_null()) a.cert.p_saturation = c.at("Z").get<IndexSet>();
    a.cert.sat_tolerance = c.at("sat_tolerance").get<double>();
    a.cert.norm = c.at("norm").get<double>();
    a.cert.solve_residual = c.at("solve_residual").get<double>();
    a.cert.solver_status = SolveStatus::Optimal;
    a.cert.multiplier = c.at("multiplier").get<Vector>();

    a.injective = j.at("injective").get<bool>();
    a.restricted_inverse = matrix_from_json(j.at("restricted_inverse"));
    a.v = j.at("v").get<Vector>();

    const json& k = j.at("constants");
    a.constants.a = k.at("a").get<double>();
    a.constants.b = k.at("b").get<double>();
    a.constants.nu = k.at("nu").get<double>();
    a.constants.mu = opt_from_json(k, "mu");
    a.constants.v_under = opt_from_json(k, "v_under");
    a.constants.z_under = opt_from_json(k, "z_under");
    a.constants.margin = opt_from_json(k, "margin");
    a.constants.corr = opt_from_json(k, "corr");
    a.constants.c1 = k.at("c1").get<double>();
    a.constants.c2 = k.at("c2").get<double>();
    a.constants.derived = k.at("derived").get<bool>();

    a.x_under = j.at("x_under").get<double>();
    a.tau_max_noiseless = j.contains("tau_max_noiseless") ? j.at("tau_max_noiseless").get<double>() : kInf;
    return rec;
  } catch (const json::exception& e) {
    throw ParseError(std::string("analysis json: ") + e.what());
  }
}

void write_analysis_file(const std::string& path, const ProblemInstance& inst,
                         const StabilityAnalysis& analysis) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << analysis_to_json(inst, analysis) << "\n";
}

AnalysisRecord read_analysis_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return analysis_from_json(buf.str());
}

std::string certificate_to_text(const Certificate& cert) {
  std::ostringstream os;
  os.precision(17);
  os << "beta=" << alpha_label(cert.beta) << "\n";
  os << "norm=" << cert.norm << "\n";
  os << "status=" << to_string(cert.solver_status) << "\n";
  os << "sat_tolerance=" << cert.sat_tolerance << "\n";
  os << "p=";
  for (std::size_t i = 0; i < cert.p.size(); ++i) os << (i ? " " : "") << cert.p[i];
  os << "\nJ=";
  for (std::size_t i = 0; i < cert.extended_support.size(); ++i)
    os << (i ? " " : "") << cert.extended_support[i];
  os << "\nJ_excess=";
  for (std::size_t i = 0; i < cert.support_excess.size(); ++i)
    os << (i ? " " : "") << cert.support_excess[i];
  if (cert.p_support) {
    os << "\nS=";
    for (std::size_t i = 0; i < cert.p_support->size(); ++i) os << (i ? " " : "") << (*cert.p_support)[i];
  }
  if (cert.p_saturation) {
    os << "\nZ=";
    for (std::size_t i = 0; i < cert.p_saturation->size(); ++i)
      os << (i ? " " : "") << (*cert.p_saturation)[i];
  }
  os << "\n";
  return os.str();
}

}  // namespace supcert
