#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "supcert/linalg.hpp"

using namespace supcert;
namespace fs = std::filesystem;

namespace {

const std::string kBin = SUPCERT_BIN;

struct CmdResult {
  int exit_code;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  static int counter = 0;
  std::string capture = (fs::temp_directory_path() / ("supcert_cli_out_" + std::to_string(counter++))).string();
  std::string cmd = kBin + " " + args + " > " + capture + " 2>&1";
  int status = std::system(cmd.c_str());
  CmdResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  fs::remove(capture);
  return r;
}

fs::path sandbox() {
  fs::path dir = fs::temp_directory_path() / "supcert_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
  fs::path p = sandbox() / name;
  std::ofstream out(p);
  out << content;
  return p.string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("certify identity design") {
  std::string m = write_file("id3.txt", "3 3\n1 0 0\n0 1 0\n0 0 1\n");
  std::string x = write_file("x3.txt", "3\n1 0 -2\n");
  CmdResult r = run_cli("certify " + m + " " + x);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("identifiable: true") != std::string::npos);
}

TEST_CASE("certify rejects the unidentifiable counterexample") {
  std::string m = write_file("counter.txt", "2 3\n1 0 1\n0 1 1\n");
  std::string x = write_file("xbad.txt", "3\n1 1 0\n");
  CmdResult r = run_cli("certify " + m + " " + x);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("identifiable: false") != std::string::npos);
}

TEST_CASE("malformed inputs exit with the input-error code") {
  std::string m = write_file("broken.txt", "2 2\n1 2 3\n");
  std::string x = write_file("x2.txt", "2\n1 0\n");
  CHECK(run_cli("certify " + m + " " + x).exit_code == 2);
  CHECK(run_cli("certify missing_file.txt " + x).exit_code == 2);
  CHECK(run_cli("nonsense-subcommand").exit_code == 2);
}

TEST_CASE("analyze writes the identity-design constants") {
  std::string m = write_file("id4.txt", "4 4\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
  std::string x = write_file("x4.txt", "4\n2 0 0 0\n");
  std::string out = (sandbox() / "analysis_id.json").string();
  CmdResult r = run_cli("analyze " + m + " " + x + " --alpha inf -o " + out);
  REQUIRE(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(slurp(out));
  CHECK(j["constants"]["c1"].get<double>() == doctest::Approx(1.0));
  CHECK(j["constants"]["c2"].get<double>() == doctest::Approx(0.5));
  CHECK(j["constants"]["a"].get<double>() == doctest::Approx(0.0));
  CHECK(j["constants"]["mu"].get<double>() == doctest::Approx(0.0));
  CHECK(j["constants"]["b"].get<double>() == doctest::Approx(1.0));
  CHECK(j["constants"]["nu"].get<double>() == doctest::Approx(1.0));
  CHECK_FALSE(j["constants"]["derived"].get<bool>());
  // J contains I, listed explicitly
  CHECK(j["certificate"]["J"].size() >= j["support"].size());
}

TEST_CASE("analyze flags derived l2 constants") {
  std::string m = write_file("id4b.txt", "4 4\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
  std::string x = write_file("x4b.txt", "4\n2 0 0 0\n");
  std::string out = (sandbox() / "analysis_l2.json").string();
  CmdResult r = run_cli("analyze " + m + " " + x + " --alpha 2 -o " + out);
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("derived") != std::string::npos);
  nlohmann::json j = nlohmann::json::parse(slurp(out));
  CHECK(j["constants"]["derived"].get<bool>());
}

TEST_CASE("analyze reports injectivity failure with its exit code") {
  std::string m = write_file("dup.txt", "2 3\n1 0 1\n0 1 0\n");
  std::string x = write_file("xdup.txt", "3\n1 0 1\n");
  CmdResult r = run_cli("analyze " + m + " " + x + " --alpha 2");
  CHECK(r.exit_code == 3);
}

TEST_CASE("analyze of an unidentifiable signal exits 1") {
  std::string m = write_file("counter2.txt", "2 3\n1 0 1\n0 1 1\n");
  std::string x = write_file("xbad2.txt", "3\n1 1 0\n");
  CmdResult r = run_cli("analyze " + m + " " + x + " --alpha inf");
  CHECK(r.exit_code == 1);
}

TEST_CASE("predict without noise reproduces the noiseless closed form") {
  std::string m = write_file("id4c.txt", "4 4\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
  std::string x = write_file("x4c.txt", "4\n2 0 0 0\n");
  std::string analysis = (sandbox() / "analysis_p.json").string();
  REQUIRE(run_cli("analyze " + m + " " + x + " --alpha inf -o " + analysis).exit_code == 0);
  std::string sol = (sandbox() / "solution_p.txt").string();
  CmdResult r = run_cli("predict " + analysis + " --tau 0.5 -o " + sol);
  REQUIRE(r.exit_code == 0);
  Vector xp = read_vector_file(sol);
  CHECK(xp[0] == doctest::Approx(1.5));
  CHECK(xp[1] == 0.0);

  // regime-violating tau names the failed inequality and exits 4
  CmdResult bad = run_cli("predict " + analysis + " --tau 1.5 -o " + sol);
  CHECK(bad.exit_code == 4);
}

TEST_CASE("verify passes on the identity design") {
  std::string m = write_file("id4d.txt", "4 4\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n");
  std::string x = write_file("x4d.txt", "4\n2 0 0 0\n");
  std::string analysis = (sandbox() / "analysis_v.json").string();
  REQUIRE(run_cli("analyze " + m + " " + x + " --alpha inf -o " + analysis).exit_code == 0);
  CmdResult r = run_cli("verify " + analysis + " --tau 0.5 --noise-uniform 0.3 --seed 5");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("kkt_residual=") != std::string::npos);
  CHECK(r.output.find("support_match=true") != std::string::npos);
}

TEST_CASE("toy command is deterministic") {
  std::string out1 = (sandbox() / "toy1.csv").string();
  std::string out2 = (sandbox() / "toy2.csv").string();
  CmdResult a = run_cli("toy --seed 1 -o " + out1);
  CmdResult b = run_cli("toy --seed 1 -o " + out2);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(slurp(out1) == slurp(out2));
  CHECK(slurp(out1).rfind("# supcert", 0) == 0);
}

TEST_CASE("toy golden file") {
  std::string golden = std::string(GOLDEN_DIR) + "/toy_seed1.csv";
  std::string out = (sandbox() / "toy_golden_check.csv").string();
  REQUIRE(run_cli("toy --seed 1 -o " + out).exit_code == 0);
  CHECK(slurp(out) == slurp(golden));
}

TEST_CASE("sweep writes csv outputs and repeats bit-identically") {
  std::string cfg = write_file("sweep.cfg",
                               "n = 20\nm = 10\nk_values = 2,4\ntrials_per_k = 4\n"
                               "inv_alpha_grid = 0,0.5,1\ns_e_values = 0,10\nmaster_seed = 11\n");
  std::string dir1 = (sandbox() / "sweep1").string();
  std::string dir2 = (sandbox() / "sweep2").string();
  CmdResult a = run_cli("sweep --config " + cfg + " -o " + dir1);
  CmdResult b = run_cli("sweep --config " + cfg + " -o " + dir2 + " --jobs 2");
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  for (std::string f : {"records.csv", "curves.csv", "heatmap_se0.csv", "heatmap_se10.csv"}) {
    CHECK(fs::exists(dir1 + "/" + f));
    CHECK(slurp(dir1 + "/" + f) == slurp(dir2 + "/" + f));
  }
}
