#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "supcert/rng.hpp"
#include "supcert/serialize.hpp"
#include "supcert/stability.hpp"

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

Vector soft_threshold(const Vector& y, double t) {
  Vector r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    r[i] = y[i] > t ? y[i] - t : (y[i] < -t ? y[i] + t : 0.0);
  return r;
}

}  // namespace

TEST_CASE("identity-design injectivity and multiplier for the sup-norm loss") {
  Matrix id3 = Matrix::identity(3);
  ProblemInstance inst = make_instance(id3, {2.0, 0.0, 0.0});
  StabilityAnalysis a = analyze(inst, kInf);
  CHECK(a.injective);
  REQUIRE(a.restricted_inverse.rows() == 1);
  CHECK(a.restricted_inverse(0, 0) == doctest::Approx(1.0));
  CHECK(a.v[0] == doctest::Approx(1.0));
  CHECK(a.v[1] == 0.0);
  CHECK(a.x_under == doctest::Approx(2.0));
  CHECK(a.tau_max_noiseless == doctest::Approx(2.0));
}

TEST_CASE("identity-design l2 multiplier is the normalized sign pattern") {
  Matrix id6 = Matrix::identity(6);
  ProblemInstance inst = make_instance(id6, {1.0, -1.0, 0.0, 1.0, 0.0, 0.0});
  StabilityAnalysis a = analyze(inst, 2.0);
  double root_k = std::sqrt(3.0);
  for (std::size_t t = 0; t < inst.support.size(); ++t)
    CHECK(a.v[inst.support[t]] == doctest::Approx(inst.signs[t] / root_k).epsilon(1e-9));
}

TEST_CASE("rank-deficient extended support fails the l2 injectivity check") {
  Matrix phi = from_rows({{1, 0, 1}, {0, 1, 0}});
  ProblemInstance inst = make_instance(phi, {1.0, 0.0, 1.0});
  Certificate cert = min_norm_certificate(inst, 2.0);
  InjectivityResult inj = injectivity_check(cert, phi);
  CHECK_FALSE(inj.injective);
  CHECK(inj.failure_reason.find("rank") != std::string::npos);
  CHECK_THROWS_AS(analyze(inst, 2.0), NotInjective);
}

TEST_CASE("gaussian instances pass injectivity for the sup-norm loss") {
  SeededRng rng(401);
  int seen = 0;
  for (int trial = 0; trial < 70 && seen < 15; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    if (!is_identifiable(inst).first) continue;
    ++seen;
    Certificate cert = min_norm_certificate(inst, kInf);
    InjectivityResult inj = injectivity_check(cert, inst.phi);
    CHECK(inj.injective);
    REQUIRE(cert.p_support.has_value());
    CHECK(cert.p_support->size() == cert.extended_support.size());
  }
  CHECK(seen >= 15);
}

TEST_CASE("injectivity conditions brute force") {
  Matrix id4 = Matrix::identity(4);
  ProblemInstance inst = make_instance(id4, {1.0, 0.0, -1.0, 0.0});
  Certificate cert = min_norm_certificate(inst, kInf);
  CHECK(injectivity_bruteforce(id4, cert));

  SeededRng rng(402);
  int seen = 0;
  for (int trial = 0; trial < 50 && seen < 5; ++trial) {
    ProblemInstance g = random_instance(rng, 6, 8, 2);
    if (!is_identifiable(g).first) continue;
    Certificate c = min_norm_certificate(g, kInf);
    if (c.extended_support.size() > 6) continue;
    ++seen;
    CHECK(injectivity_bruteforce(g.phi, c));
  }
  CHECK(seen >= 5);

  // a synthetic certificate whose J contains a zero column falsifies the
  // sign-vector hypothesis of the sufficient conditions
  Matrix padded(4, 5, 0.0);
  for (std::size_t i = 0; i < 4; ++i) padded(i, i) = 1.0;
  Certificate broken = cert;
  broken.extended_support = {0, 4};
  CHECK_FALSE(injectivity_bruteforce(padded, broken));

  Matrix big = Matrix::identity(14);
  ProblemInstance large = make_instance(big, Vector(14, 1.0));
  Certificate cl = min_norm_certificate(large, kInf);
  CHECK_THROWS_AS(injectivity_bruteforce(big, cl), TooLarge);
}

TEST_CASE("multiplier sign relation on the support excess") {
  SeededRng rng(403);
  int seen = 0, with_excess = 0;
  for (int trial = 0; trial < 90 && seen < 15; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    if (!is_identifiable(inst).first) continue;
    ++seen;
    for (double alpha : {1.0, 2.0, kInf}) {
      StabilityAnalysis a;
      try {
        a = analyze(inst, alpha);
      } catch (const std::exception&) {
        continue;
      }
      Vector eta = multiply_transpose(inst.phi, a.cert.p);
      for (std::size_t j : a.cert.support_excess) {
        ++with_excess;
        CHECK(sign_of(a.v[j]) == -sign_of(eta[j]));
        CHECK(std::abs(std::abs(eta[j]) - 1.0) <= a.cert.sat_tolerance);
      }
    }
  }
  CHECK(seen >= 15);
  CHECK(with_excess > 10);
}

TEST_CASE("subgradient membership of the multiplier across losses") {
  SeededRng rng(404);
  int seen = 0;
  for (int trial = 0; trial < 70 && seen < 10; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    if (!is_identifiable(inst).first) continue;
    ++seen;
    for (double alpha : {1.0, 2.0, kInf}) {
      StabilityAnalysis a;
      try {
        a = analyze(inst, alpha);
      } catch (const std::exception&) {
        continue;
      }
      CHECK(subdifferential_distance(multiply(inst.phi, a.v), a.cert.p, a.cert.beta) <= 1e-6);
      CHECK(a.constants.nu <= a.constants.b + 1e-9);
    }
  }
  CHECK(seen >= 10);
}

TEST_CASE("identity-design constants match the closed-form evaluation") {
  Matrix id4 = Matrix::identity(4);
  ProblemInstance inst = make_instance(id4, {1.0, 0.0, 0.0, 0.0});
  StabilityAnalysis a = analyze(inst, kInf);
  CHECK(a.constants.a == doctest::Approx(0.0));
  REQUIRE(a.constants.mu.has_value());
  CHECK(*a.constants.mu == doctest::Approx(0.0));
  CHECK(a.constants.b == doctest::Approx(1.0));
  CHECK(a.constants.nu == doctest::Approx(1.0));
  CHECK_FALSE(a.constants.v_under.has_value());
  CHECK(a.constants.c1 == doctest::Approx(1.0));
  CHECK(a.constants.c2 == doctest::Approx(0.5));
  CHECK(a.constants.c2 <= 1.0 / a.constants.nu + 1e-12);
}

TEST_CASE("noiseless solution on the scalar design") {
  Matrix id1 = Matrix::identity(1);
  ProblemInstance inst = make_instance(id1, {2.0});
  StabilityAnalysis a = analyze(inst, kInf);
  Vector x = noiseless_solution(inst, a, 0.5);
  CHECK(x[0] == doctest::Approx(1.5));
  CHECK_THROWS_AS(noiseless_solution(inst, a, 2.5), TauOutOfRange);
  CHECK_THROWS_AS(noiseless_solution(inst, a, 0.0), TauOutOfRange);
}

TEST_CASE("noiseless solution converges to the signal as tau vanishes") {
  SeededRng rng(405);
  ProblemInstance inst = random_instance(rng, 10, 20, 4);
  while (!is_identifiable(inst).first) inst = random_instance(rng, 10, 20, 4);
  StabilityAnalysis a = analyze(inst, kInf);
  for (double tau : {1e-3, 1e-6, 1e-9}) {
    Vector x = noiseless_solution(inst, a, tau * a.tau_max_noiseless);
    CHECK(norm_linf(sub(x, inst.x0)) <= tau * a.tau_max_noiseless * (a.constants.nu + 1e-9));
  }
}

TEST_CASE("noiseless closed form matches the solver optimum") {
  SeededRng rng(406);
  int seen = 0;
  for (int trial = 0; trial < 60 && seen < 8; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    if (!is_identifiable(inst).first) continue;
    Vector y = multiply(inst.phi, inst.x0);
    for (double alpha : {1.0, kInf}) {
      StabilityAnalysis a;
      try {
        a = analyze(inst, alpha);
      } catch (const std::exception&) {
        continue;
      }
      ++seen;
      double tau = 0.5 * a.tau_max_noiseless;
      Vector xbar = noiseless_solution(inst, a, tau);
      SolveResult opt = solve_primal(inst.phi, y, alpha, tau);
      REQUIRE(opt.status == SolveStatus::Optimal);
      CHECK(std::abs(norm_l1(xbar) - opt.objective) <= 1e-6 * (1.0 + opt.objective));
      CHECK(kkt_residual(xbar, a.cert.p, inst.phi, y, alpha, tau) <= 1e-6);
    }
  }
  CHECK(seen >= 8);
}

TEST_CASE("identity-design prediction equals soft thresholding") {
  Matrix id4 = Matrix::identity(4);
  ProblemInstance inst = make_instance(id4, {2.0, 0.0, 0.0, 0.0});
  StabilityAnalysis a = analyze(inst, kInf);
  double tau = 0.5;
  Vector w{0.3, 0.1, -0.2, 0.05};
  Vector x = predicted_noisy_solution(inst, a, w, tau);
  CHECK(x[0] == doctest::Approx(1.8).epsilon(1e-14));
  Vector y = add(inst.x0, w);
  Vector oracle = soft_threshold(y, tau);
  CHECK(norm_linf(sub(x, oracle)) <= 1e-12);

  // w = 0 reduces to the noiseless formula
  Vector xz = predicted_noisy_solution(inst, a, {0, 0, 0, 0}, tau);
  CHECK(norm_linf(sub(xz, noiseless_solution(inst, a, tau))) == 0.0);
}

TEST_CASE("noise regime guard reports the violated inequality") {
  Matrix id4 = Matrix::identity(4);
  ProblemInstance inst = make_instance(id4, {2.0, 0.0, 0.0, 0.0});
  StabilityAnalysis a = analyze(inst, kInf);
  double tau_bad = a.constants.c2 * a.x_under * 1.01;
  CHECK_THROWS_WITH_AS(predicted_noisy_solution(inst, a, {0, 0, 0, 0}, tau_bad),
                       doctest::Contains("tau inequality"), NoiseRegimeViolated);
  double tau = 0.5 * a.constants.c2 * a.x_under;
  Vector w_big{0.9 * tau * a.constants.c1 * 1.2, 0, 0, 0};
  w_big[0] = a.constants.c1 * tau * 1.2;
  CHECK_THROWS_WITH_AS(predicted_noisy_solution(inst, a, w_big, tau),
                       doctest::Contains("noise inequality"), NoiseRegimeViolated);
  // force bypasses the guard
  Vector forced = predicted_noisy_solution(inst, a, w_big, tau, true);
  CHECK(forced.size() == 4);
}

TEST_CASE("prediction verification on the identity design") {
  Matrix id4 = Matrix::identity(4);
  ProblemInstance inst = make_instance(id4, {2.0, 0.0, 0.0, 0.0});
  StabilityAnalysis a = analyze(inst, kInf);
  double tau = 0.5 * a.constants.c2 * a.x_under;
  Vector w{0.2 * tau, -0.1 * tau, 0.15 * tau, 0.05 * tau};
  VerificationReport rep = verify_prediction(inst, a, w, tau);
  CHECK(rep.kkt_residual <= 1e-8);
  CHECK(rep.objective_gap <= 1e-8);
  CHECK(rep.support_match);
}

TEST_CASE("prediction end-to-end on compressed-sensing instances") {
  SeededRng rng(407);
  int seen = 0;
  for (int trial = 0; trial < 60 && seen < 10; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    if (!is_identifiable(inst).first) continue;
    for (double alpha : {1.0, kInf}) {
      StabilityAnalysis a;
      try {
        a = analyze(inst, alpha);
      } catch (const std::exception&) {
        continue;
      }
      ++seen;
      double tau = 0.5 * a.constants.c2 * a.x_under;
      Vector w = uniform_noise(10, 1.0, rng);
      w = scale(w, 0.5 * a.constants.c1 * tau / norm_lp(w, alpha));
      VerificationReport rep = verify_prediction(inst, a, w, tau);
      CHECK(rep.kkt_residual <= 1e-6);
      CHECK(rep.objective_gap <= 1e-6 * (1.0 + norm_l1(rep.x_pred)));
      // the prediction is supported on all of J inside the regime
      IndexSet pred_supp = support(rep.x_pred, 0.0);
      CHECK(pred_supp == a.cert.extended_support);
    }
  }
  CHECK(seen >= 10);
}

TEST_CASE("mu stays below one on gaussian designs") {
  SeededRng rng(408);
  int seen = 0;
  for (int trial = 0; trial < 70 && seen < 12; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    if (!is_identifiable(inst).first) continue;
    StabilityAnalysis a;
    try {
      a = analyze(inst, kInf);
    } catch (const std::exception&) {
      continue;
    }
    ++seen;
    REQUIRE(a.constants.mu.has_value());
    CHECK(*a.constants.mu < 1.0);
  }
  CHECK(seen >= 12);
}

TEST_CASE("l2 constants are flagged as derived") {
  SeededRng rng(409);
  ProblemInstance inst = random_instance(rng, 10, 20, 4);
  while (!is_identifiable(inst).first) inst = random_instance(rng, 10, 20, 4);
  StabilityAnalysis a = analyze(inst, 2.0);
  CHECK(a.constants.derived);
  CHECK(a.constants.c1 > 0.0);
  CHECK(a.constants.c2 > 0.0);
  CHECK(a.constants.c1 <= 0.5);
  CHECK_FALSE(a.constants.mu.has_value());
}

TEST_CASE("analysis records survive the json round trip") {
  SeededRng rng(411);
  ProblemInstance inst = random_instance(rng, 8, 16, 3);
  while (!is_identifiable(inst).first) inst = random_instance(rng, 8, 16, 3);
  for (double alpha : {1.0, 2.0, kInf}) {
    StabilityAnalysis a;
    try {
      a = analyze(inst, alpha);
    } catch (const std::exception&) {
      continue;
    }
    AnalysisRecord rec = analysis_from_json(analysis_to_json(inst, a));
    CHECK(rec.analysis.alpha == a.alpha);
    CHECK(rec.analysis.cert.beta == a.cert.beta);
    CHECK(rec.analysis.cert.extended_support == a.cert.extended_support);
    CHECK(rec.analysis.constants.c1 == a.constants.c1);
    CHECK(rec.analysis.constants.c2 == a.constants.c2);
    CHECK(rec.analysis.v == a.v);
    CHECK(rec.inst.x0 == inst.x0);
    CHECK(rec.inst.support == inst.support);
    // predictions from the file match predictions from the live analysis
    double tau = 0.5 * a.constants.c2 * a.x_under;
    Vector w = uniform_noise(8, 0.4 * a.constants.c1 * tau / 8.0, rng);
    Vector from_live = predicted_noisy_solution(inst, a, w, tau);
    Vector from_file = predicted_noisy_solution(rec.inst, rec.analysis, w, tau);
    CHECK(norm_linf(sub(from_live, from_file)) == 0.0);
  }
}

TEST_CASE("l1-loss analysis carries z_under and passes the solver cross-check") {
  SeededRng rng(410);
  int seen = 0;
  for (int trial = 0; trial < 60 && seen < 6; ++trial) {
    ProblemInstance inst = random_instance(rng, 10, 20, 4);
    if (!is_identifiable(inst).first) continue;
    StabilityAnalysis a;
    try {
      a = analyze(inst, 1.0);
    } catch (const std::exception&) {
      continue;
    }
    ++seen;
    REQUIRE(a.constants.z_under.has_value());
    CHECK(*a.constants.z_under > 0.0);
    double tau = 0.5 * a.constants.c2 * a.x_under;
    Vector w = uniform_noise(10, 1.0, rng);
    w = scale(w, 0.5 * a.constants.c1 * tau / norm_l1(w));
    VerificationReport rep = verify_prediction(inst, a, w, tau);
    CHECK(rep.kkt_residual <= 1e-6);
    CHECK(rep.objective_gap <= 1e-6 * (1.0 + norm_l1(rep.x_pred)));
  }
  CHECK(seen >= 6);
}
