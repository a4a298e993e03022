#include "supcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace supcert {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool all_finite(const Vector& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_l1(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double norm_l2(const Vector& v) { return std::sqrt(dot(v, v)); }

double norm_linf(const Vector& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

double norm_lp(const Vector& v, double alpha) {
  if (std::isinf(alpha)) return norm_linf(v);
  if (alpha == 1.0) return norm_l1(v);
  if (alpha == 2.0) return norm_l2(v);
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), alpha);
  return std::pow(s, 1.0 / alpha);
}

Vector add(const Vector& a, const Vector& b) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vector sub(const Vector& a, const Vector& b) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vector scale(const Vector& a, double s) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

Vector canonical_vector(std::size_t length, std::size_t index) {
  Vector r(length, 0.0);
  r[index] = 1.0;
  return r;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix r = a;
  for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] += b.data()[i];
  return r;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  Matrix r = a;
  for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] -= b.data()[i];
  return r;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector multiply(const Matrix& a, const Vector& x) {
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vector multiply_transpose(const Matrix& a, const Vector& x) {
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

Matrix select(const Matrix& a, const IndexSet& row_idx, const IndexSet& col_idx) {
  Matrix r(row_idx.size(), col_idx.size());
  for (std::size_t i = 0; i < row_idx.size(); ++i)
    for (std::size_t j = 0; j < col_idx.size(); ++j) r(i, j) = a(row_idx[i], col_idx[j]);
  return r;
}

Matrix select_rows(const Matrix& a, const IndexSet& row_idx) {
  Matrix r(row_idx.size(), a.cols());
  for (std::size_t i = 0; i < row_idx.size(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(row_idx[i], j);
  return r;
}

Matrix select_cols(const Matrix& a, const IndexSet& col_idx) {
  Matrix r(a.rows(), col_idx.size());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < col_idx.size(); ++j) r(i, j) = a(i, col_idx[j]);
  return r;
}

Vector select(const Vector& v, const IndexSet& idx) {
  Vector r(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) r[i] = v[idx[i]];
  return r;
}

IndexSet complement(const IndexSet& idx, std::size_t universe) {
  std::vector<bool> in(universe, false);
  for (std::size_t i : idx) in[i] = true;
  IndexSet r;
  for (std::size_t i = 0; i < universe; ++i)
    if (!in[i]) r.push_back(i);
  return r;
}

double op_norm_inf_inf(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

double op_norm_1_inf(const Matrix& a) {
  double best = 0.0;
  for (double v : a.data()) best = std::max(best, std::abs(v));
  return best;
}

double op_norm_2_inf(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

namespace {

struct LuFactors {
  Matrix lu;
  std::vector<std::size_t> perm;
};

LuFactors lu_factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("lu_factor: matrix not square");
  if (!a.all_finite()) throw std::invalid_argument("lu_factor: non-finite entries");
  std::size_t n = a.rows();
  LuFactors f{a, std::vector<std::size_t>(n)};
  std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});
  double scale = op_norm_1_inf(a);
  double pivot_tol = 1e-12 * std::max(1.0, scale);
  Matrix& m = f.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(m(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      double v = std::abs(m(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (best <= pivot_tol) throw SingularMatrix("pivot below threshold at column " + std::to_string(k));
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      double factor = m(i, k) / m(k, k);
      m(i, k) = factor;
      for (std::size_t j = k + 1; j < n; ++j) m(i, j) -= factor * m(k, j);
    }
  }
  return f;
}

Vector lu_solve(const LuFactors& f, const Vector& b) {
  std::size_t n = f.lu.rows();
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (std::size_t i = 1; i < n; ++i) {
    double s = x[i];
    for (std::size_t j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= f.lu(ii, j) * x[j];
    x[ii] = s / f.lu(ii, ii);
  }
  return x;
}

}  // namespace

Vector solve_square(const Matrix& a, const Vector& b) {
  if (!all_finite(b)) throw std::invalid_argument("solve_square: non-finite rhs");
  LuFactors f = lu_factor(a);
  Vector x = lu_solve(f, b);
  // One step of iterative refinement tightens the residual to the contract.
  Vector r = sub(b, multiply(a, x));
  Vector dx = lu_solve(f, r);
  return add(x, dx);
}

Matrix invert_square(const Matrix& a) {
  std::size_t n = a.rows();
  LuFactors f = lu_factor(a);
  Matrix inv(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Vector e(n, 0.0);
    e[j] = 1.0;
    Vector col = lu_solve(f, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

SvdResult svd(const Matrix& a) {
  if (!a.all_finite()) throw std::invalid_argument("svd: non-finite entries");
  bool transposed = a.rows() < a.cols();
  Matrix w = transposed ? transpose(a) : a;  // m >= n from here on
  std::size_t m = w.rows(), n = w.cols();
  Matrix v = Matrix::identity(n);

  // One-sided Jacobi: orthogonalize column pairs until every pair is
  // numerically orthogonal.
  const double eps = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          app += w(i, p) * w(i, p);
          aqq += w(i, q) * w(i, q);
          apq += w(i, p) * w(i, q);
        }
        if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        double zeta = (aqq - app) / (2.0 * apq);
        double t = sign_of(zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        if (zeta == 0.0) t = 1.0;
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          double wp = w(i, p), wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Vector norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += w(i, j) * w(i, j);
    norms[j] = std::sqrt(s);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult r;
  r.u = Matrix(m, n);
  r.v = Matrix(n, n);
  r.sigma.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t src = order[j];
    double s = norms[src];
    r.sigma[j] = s;
    double inv = s > 0.0 ? 1.0 / s : 0.0;
    for (std::size_t i = 0; i < m; ++i) r.u(i, j) = w(i, src) * inv;
    for (std::size_t i = 0; i < n; ++i) r.v(i, j) = v(i, src);
  }
  if (transposed) std::swap(r.u, r.v);
  return r;
}

Matrix pseudo_inverse(const Matrix& a, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("pseudo_inverse: tol must be positive");
  SvdResult s = svd(a);
  double cutoff = s.sigma.empty() ? 0.0 : tol * s.sigma[0];
  Matrix pinv(a.cols(), a.rows(), 0.0);
  for (std::size_t k = 0; k < s.sigma.size(); ++k) {
    if (s.sigma[k] <= cutoff || s.sigma[k] == 0.0) continue;
    double inv = 1.0 / s.sigma[k];
    for (std::size_t i = 0; i < a.cols(); ++i) {
      double vik = s.v(i, k) * inv;
      if (vik == 0.0) continue;
      for (std::size_t j = 0; j < a.rows(); ++j) pinv(i, j) += vik * s.u(j, k);
    }
  }
  return pinv;
}

std::size_t numerical_rank(const Matrix& a, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("numerical_rank: tol must be positive");
  SvdResult s = svd(a);
  if (s.sigma.empty()) return 0;
  double cutoff = tol * s.sigma[0];
  std::size_t r = 0;
  for (double sv : s.sigma)
    if (sv > cutoff && sv > 0.0) ++r;
  return r;
}

Matrix read_matrix(std::istream& in) {
  std::size_t rows = 0, cols = 0;
  if (!(in >> rows >> cols)) throw ParseError("matrix header: expected 'rows cols'");
  if (rows < 1 || cols < 1) throw ParseError("matrix header: dimensions must be positive");
  Matrix a(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) {
    if (!(in >> a.data()[i])) throw ParseError("matrix body: expected " + std::to_string(rows * cols) + " entries");
  }
  double trailing;
  if (in >> trailing) throw ParseError("matrix body: trailing data after " + std::to_string(rows * cols) + " entries");
  if (!a.all_finite()) throw ParseError("matrix body: non-finite entry");
  return a;
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_matrix(in);
}

void write_matrix(std::ostream& out, const Matrix& a) {
  out << a.rows() << " " << a.cols() << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (j) out << " ";
      out << a(i, j);
    }
    out << "\n";
  }
}

Vector read_vector(std::istream& in) {
  std::size_t n = 0;
  if (!(in >> n)) throw ParseError("vector header: expected length");
  if (n < 1) throw ParseError("vector header: length must be positive");
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i)
    if (!(in >> v[i])) throw ParseError("vector body: expected " + std::to_string(n) + " entries");
  double trailing;
  if (in >> trailing) throw ParseError("vector body: trailing data");
  if (!all_finite(v)) throw ParseError("vector body: non-finite entry");
  return v;
}

Vector read_vector_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_vector(in);
}

void write_vector(std::ostream& out, const Vector& v) {
  out << v.size() << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << " ";
    out << v[i];
  }
  out << "\n";
}

}  // namespace supcert
