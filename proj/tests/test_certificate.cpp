#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "supcert/certificate.hpp"
#include "supcert/rng.hpp"

using namespace supcert;

namespace {

Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size(), c = rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

ProblemInstance random_instance(SeededRng& rng, std::size_t m, std::size_t n, std::size_t k) {
  Matrix phi = gaussian_design(m, n, rng);
  Vector x0 = rademacher_signal(n, k, rng);
  return make_instance(std::move(phi), std::move(x0));
}

}  // namespace

TEST_CASE("support extraction") {
  CHECK(support({0.0, 3.0, -1e-14}, 1e-9) == IndexSet{1});
  CHECK(support({0.0, 0.0, 0.0}, 1e-9).empty());
  CHECK(support({1.0, 1.0, 1.0}, 0.0) == IndexSet{0, 1, 2});
}

TEST_CASE("saturation support extraction") {
  CHECK(saturation_support({1.0, -1.0, 0.5}, 1e-9) == IndexSet{0, 1});
  CHECK(saturation_support({0.0, 0.0}, 1e-9).empty());
  CHECK(saturation_support({0.999999999, 1.0}, 1e-6) == IndexSet{0, 1});
}

TEST_CASE("identifiability on the identity design") {
  Matrix id4 = Matrix::identity(4);
  auto [ok, cert] = is_identifiable(make_instance(id4, {0.0, -2.5, 0.0, 1.0}));
  CHECK(ok);
  REQUIRE(cert.has_value());
  Vector eta = multiply_transpose(id4, cert->p);
  CHECK(eta[1] == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(eta[3] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("identifiability counterexample pair") {
  Matrix phi = from_rows({{1, 0, 1}, {0, 1, 1}});
  auto bad = is_identifiable(make_instance(phi, {1.0, 1.0, 0.0}));
  CHECK_FALSE(bad.first);
  auto good = is_identifiable(make_instance(phi, {0.0, 0.0, 1.0}));
  CHECK(good.first);
  CHECK_THROWS_AS(min_norm_certificate(make_instance(phi, {1.0, 1.0, 0.0}), kInf), NotIdentifiable);
}

TEST_CASE("identity design certificates") {
  Matrix id5 = Matrix::identity(5);
  ProblemInstance inst = make_instance(id5, {1.0, 0, 0, 0, 0});

  Certificate c2 = min_norm_certificate(inst, 2.0);
  CHECK(c2.beta == 2.0);
  CHECK(c2.p[0] == doctest::Approx(1.0));
  CHECK(c2.extended_support == IndexSet{0});
  CHECK(support_excess_size(c2) == 0);

  Certificate c1 = min_norm_certificate(inst, kInf);  // beta = 1
  CHECK(c1.beta == 1.0);
  CHECK(c1.p[0] == doctest::Approx(1.0));
  REQUIRE(c1.p_support.has_value());
  CHECK(*c1.p_support == IndexSet{0});
  CHECK(c1.extended_support == IndexSet{0});
  CHECK(c1.norm == doctest::Approx(1.0));
}

TEST_CASE("certificate invariants over random instances") {
  SeededRng rng(301);
  int seen = 0;
  for (int trial = 0; trial < 70 && seen < 15; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    std::pair<bool, std::optional<Certificate>> id = is_identifiable(inst);
    if (!id.first) continue;
    ++seen;
    for (double alpha : {1.0, 2.0, kInf}) {
      Certificate cert = min_norm_certificate(inst, alpha);
      REQUIRE(cert.solver_status == SolveStatus::Optimal);
      Vector eta = multiply_transpose(inst.phi, cert.p);
      for (std::size_t t = 0; t < inst.support.size(); ++t)
        CHECK(std::abs(eta[inst.support[t]] - inst.signs[t]) <= 1e-7);
      CHECK(norm_linf(eta) <= 1.0 + 1e-7);
      // I is always contained in J
      for (std::size_t i : inst.support) {
        bool found = false;
        for (std::size_t j : cert.extended_support) found = found || j == i;
        CHECK(found);
      }
    }
  }
  CHECK(seen >= 15);
}

TEST_CASE("minimal objective is pivot-rule independent") {
  SeededRng rng(302);
  SolverConfig bland, dantzig;
  dantzig.lp_pivot_rule = PivotRule::Dantzig;
  int seen = 0;
  for (int trial = 0; trial < 50 && seen < 8; ++trial) {
    ProblemInstance inst = random_instance(rng, 8, 16, 3);
    if (!is_identifiable(inst).first) continue;
    ++seen;
    for (double alpha : {1.0, kInf}) {
      Certificate a = min_norm_certificate(inst, alpha, bland);
      Certificate b = min_norm_certificate(inst, alpha, dantzig);
      CHECK(std::abs(a.norm - b.norm) <= 1e-8 * (1.0 + a.norm));
    }
  }
  CHECK(seen >= 8);
}

TEST_CASE("beta 1 extended support equals level-1 saturation of phi^T p") {
  SeededRng rng(303);
  int seen = 0;
  for (int trial = 0; trial < 50 && seen < 8; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    if (!is_identifiable(inst).first) continue;
    ++seen;
    Certificate cert = min_norm_certificate(inst, kInf);
    Vector eta = multiply_transpose(inst.phi, cert.p);
    // the box constraint binds at the optimum, so saturation against the
    // max coincides with saturation against level 1
    CHECK(norm_linf(eta) == doctest::Approx(1.0).epsilon(1e-8));
    IndexSet sat = saturation_support(eta, cert.sat_tolerance);
    CHECK(sat == cert.extended_support);
  }
  CHECK(seen >= 8);
}

TEST_CASE("compressed-sensing scale instance predicts an extended support") {
  SeededRng rng(304);
  int seen = 0, with_excess = 0;
  for (int trial = 0; trial < 90 && seen < 20; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    if (!is_identifiable(inst).first) continue;
    ++seen;
    Certificate cert = min_norm_certificate(inst, kInf);
    CHECK(cert.extended_support.size() >= inst.support.size());
    if (support_excess_size(cert) > 0) ++with_excess;
  }
  CHECK(seen >= 20);
  // the sup-norm loss almost never predicts a perfectly stable support
  CHECK(with_excess >= seen * 3 / 4);
}

TEST_CASE("support excess size examples") {
  Certificate cert;
  cert.extended_support = {0, 3, 7};
  cert.support_excess = {};
  CHECK(support_excess_size(cert) == 0);
  cert.support_excess = {7};
  CHECK(support_excess_size(cert) == 1);
}
