#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "supcert/linalg.hpp"
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

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i)
    d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

}  // namespace

TEST_CASE("pseudo inverse on identity and diagonal") {
  Matrix id3 = Matrix::identity(3);
  CHECK(max_abs_diff(pseudo_inverse(id3, 1e-12), id3) <= 1e-12);

  Matrix d = from_rows({{2, 0}, {0, 0}});
  Matrix dp = pseudo_inverse(d);
  CHECK(dp(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(dp(0, 1)) <= 1e-12);
  CHECK(std::abs(dp(1, 0)) <= 1e-12);
  CHECK(std::abs(dp(1, 1)) <= 1e-12);
}

TEST_CASE("moore-penrose identities on random full-rank matrices") {
  SeededRng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix a = gaussian_design(5, 3, rng);
    Matrix ap = pseudo_inverse(a);
    // A+ A = I_3 for full column rank
    CHECK(max_abs_diff(multiply(ap, a), Matrix::identity(3)) <= 1e-9);
    // the four identities
    CHECK(max_abs_diff(multiply(a, multiply(ap, a)), a) <= 1e-9);
    CHECK(max_abs_diff(multiply(ap, multiply(a, ap)), ap) <= 1e-9);
    Matrix aap = multiply(a, ap);
    CHECK(max_abs_diff(aap, transpose(aap)) <= 1e-9);
    Matrix apa = multiply(ap, a);
    CHECK(max_abs_diff(apa, transpose(apa)) <= 1e-9);
  }
}

TEST_CASE("pseudo inverse is an involution") {
  SeededRng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t m = 3 + rng.next_u64() % 4;
    std::size_t n = 3 + rng.next_u64() % 4;
    Matrix a = gaussian_design(m, n, rng);
    Matrix back = pseudo_inverse(pseudo_inverse(a));
    double scale = op_norm_1_inf(a);
    CHECK(max_abs_diff(back, a) <= 1e-8 * std::max(1.0, scale));
  }
}

TEST_CASE("solve_square basics") {
  Matrix id2 = Matrix::identity(2);
  Vector x = solve_square(id2, {3, -1});
  CHECK(x[0] == doctest::Approx(3));
  CHECK(x[1] == doctest::Approx(-1));

  Matrix perm = from_rows({{0, 1}, {1, 0}});
  x = solve_square(perm, {5, 7});
  CHECK(x[0] == doctest::Approx(7));
  CHECK(x[1] == doctest::Approx(5));

  Matrix rank1 = from_rows({{1, 1}, {1, 1}});
  CHECK_THROWS_AS(solve_square(rank1, {1, 2}), SingularMatrix);
}

TEST_CASE("solve_square residual contract and pinv agreement") {
  SeededRng rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix a = gaussian_design(6, 6, rng);
    Vector b(6);
    for (auto& v : b) v = rng.next_gaussian();
    Vector x = solve_square(a, b);
    Vector r = sub(multiply(a, x), b);
    CHECK(norm_linf(r) <= 1e-10 * (1.0 + norm_linf(b)));
    Vector via_pinv = multiply(pseudo_inverse(a), b);
    CHECK(norm_linf(sub(x, via_pinv)) <= 1e-8 * (1.0 + norm_linf(x)));
  }
}

TEST_CASE("operator norms") {
  Matrix a = from_rows({{1, -3}, {2, 0}});
  CHECK(op_norm_inf_inf(a) == doctest::Approx(4));
  CHECK(op_norm_1_inf(a) == doctest::Approx(3));
  CHECK(op_norm_inf_inf(Matrix::identity(5)) == doctest::Approx(1));
  CHECK(op_norm_1_inf(Matrix::identity(4)) == doctest::Approx(1));
  Matrix z(3, 3, 0.0);
  CHECK(op_norm_inf_inf(z) == 0.0);
  Matrix col(2, 1);
  col(0, 0) = 0.2;
  col(1, 0) = -0.9;
  CHECK(op_norm_1_inf(col) == doctest::Approx(0.9));
}

TEST_CASE("inf-inf norm is submultiplicative on random products") {
  SeededRng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix a = gaussian_design(4, 5, rng);
    Matrix b = gaussian_design(5, 3, rng);
    CHECK(op_norm_inf_inf(multiply(a, b)) <=
          op_norm_inf_inf(a) * op_norm_inf_inf(b) + 1e-12);
  }
}

TEST_CASE("numerical rank") {
  CHECK(numerical_rank(Matrix::identity(4)) == 4);
  Matrix prop = from_rows({{1, 2}, {2, 4}});
  CHECK(numerical_rank(prop) == 1);
  SeededRng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix g = gaussian_design(6, 4, rng);
    CHECK(numerical_rank(g) == 4);
  }
}

TEST_CASE("matrix text roundtrip and rejects") {
  Matrix a = from_rows({{1.5, -2.25}, {0.0, 3.125e-7}});
  std::stringstream s;
  write_matrix(s, a);
  Matrix b = read_matrix(s);
  CHECK(max_abs_diff(a, b) == 0.0);

  std::stringstream bad("2 2\n1 2 3\n");
  CHECK_THROWS_AS(read_matrix(bad), ParseError);
  std::stringstream extra("1 1\n1 2\n");
  CHECK_THROWS_AS(read_matrix(extra), ParseError);
  std::stringstream vec_s("3\n0.5 -1 2\n");
  Vector v = read_vector(vec_s);
  CHECK(v.size() == 3);
  CHECK(v[1] == doctest::Approx(-1));
}
