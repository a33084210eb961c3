#include "ecgstress/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecgstress/error.hpp"

namespace ecgstress {

namespace {

void require_finite(const Matrix& m, const char* what) {
  for (double v : m.data())
    if (!std::isfinite(v)) throw InputError(std::string(what) + " contains non-finite values");
}

std::string shape_text(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InputError("dimension mismatch: F1 is " + shape_text(a) + ", F2 is " + shape_text(b));
}

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

void fix_sign(std::span<double> v) {
  for (double x : v) {
    if (std::abs(x) > kSignEpsilon) {
      if (x < 0.0)
        for (double& y : v) y = -y;
      return;
    }
  }
}

}  // namespace

Matrix gram_covariance(const Matrix& f) {
  require_finite(f, "feature matrix");
  const std::size_t d = f.cols();
  Matrix g(d, d);
  for (std::size_t r = 0; r < f.rows(); ++r) {
    const auto row = f.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      const double ri = row[i];
      if (ri == 0.0) continue;
      for (std::size_t j = i; j < d; ++j) g(i, j) += ri * row[j];
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

EigenDecomposition eig_sym(const Matrix& input) {
  const std::size_t n = input.rows();
  if (n == 0 || input.cols() != n) throw InputError("eig_sym needs a non-empty square matrix");
  require_finite(input, "eig_sym input");
  const double scale = std::max(1.0, max_abs(input));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(input(i, j) - input(j, i)) > 1e-10 * scale)
        throw InputError("eig_sym: matrix is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");

  Matrix a = input;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = 0.5 * (input(i, j) + input(j, i));
  Matrix v = Matrix::identity(n);
  const double tolerance = 1e-12 * frobenius_norm(a);

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_diagonal_norm(a) > tolerance; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation zeroing a(p,q); t is the smaller root of t^2 + 2*theta*t - 1 = 0.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
          a(r, q) = a(q, r) = arq + s * (arp - tau * arq);
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p);
          const double vrq = v(r, q);
          v(r, p) = vrp - s * (vrq + tau * vrp);
          v(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }
  if (off_diagonal_norm(a) > tolerance)
    throw NumericError("eig_sym: Jacobi iteration did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  std::vector<double> col(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = a(src, src);
    double norm = 0.0;
    for (std::size_t r = 0; r < n; ++r) norm += v(r, src) * v(r, src);
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < n; ++r) col[r] = v(r, src) / norm;
    fix_sign(col);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = col[r];
  }
  return out;
}

std::vector<double> principal_weights(const Matrix& features) {
  if (features.cols() == 0) throw InputError("principal_weights: feature matrix has no columns");
  const Matrix gram = gram_covariance(features);
  const std::size_t d = gram.rows();
  if (max_abs(gram) < 1e-12) return std::vector<double>(d, 1.0 / std::sqrt(static_cast<double>(d)));
  return eig_sym(gram).vectors.column(0);
}

FusionWeights compute_fusion_weights(const Matrix& f1, const Matrix& f2) {
  require_same_shape(f1, f2);
  return FusionWeights{principal_weights(f1), principal_weights(f2), kSignConvention};
}

Matrix weighted_fuse(const Matrix& f1, const Matrix& f2, const std::optional<FusionWeights>& weights) {
  require_same_shape(f1, f2);
  const FusionWeights w = weights ? *weights : compute_fusion_weights(f1, f2);
  if (w.w1.size() != f1.cols() || w.w2.size() != f2.cols())
    throw InputError("dimension mismatch: fusion weights of length " + std::to_string(w.w1.size()) + "/" +
                     std::to_string(w.w2.size()) + " for features " + shape_text(f1));
  Matrix out(f1.rows(), f1.cols());
  for (std::size_t r = 0; r < f1.rows(); ++r)
    for (std::size_t j = 0; j < f1.cols(); ++j) out(r, j) = w.w1[j] * f1(r, j) + w.w2[j] * f2(r, j);
  return out;
}

Matrix average_fuse(const Matrix& f1, const Matrix& f2) {
  require_same_shape(f1, f2);
  Matrix out(f1.rows(), f1.cols());
  for (std::size_t r = 0; r < f1.rows(); ++r)
    for (std::size_t j = 0; j < f1.cols(); ++j) out(r, j) = 0.5 * f1(r, j) + 0.5 * f2(r, j);
  return out;
}

}  // namespace ecgstress
