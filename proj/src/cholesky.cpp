#include "cardiograph/cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cardiograph/errors.hpp"

namespace cardiograph {

namespace {

void check_pivot(double p, std::size_t j) {
  if (!(p > 0.0) || !std::isfinite(p))
    raise(errc::NotSPD, "non-positive pivot " + std::to_string(p) + " at row " +
                            std::to_string(j));
}

// Unblocked factorization of the square diagonal block a[j0..j1) within the
// full n-column matrix, followed by no trailing update (caller's job).
void factor_diag_block(double* a, std::size_t n, std::size_t j0, std::size_t j1) {
  for (std::size_t j = j0; j < j1; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = j0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    check_pivot(d, j);
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < j1; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = j0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
}

}  // namespace

void cholesky_factor(std::vector<double>& a, std::size_t n) {
  if (a.size() != n * n) raise(errc::ShapeMismatch, "matrix storage is not n*n");
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    check_pivot(d, j);
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
  }
}

void cholesky_factor_blocked(std::vector<double>& a, std::size_t n, std::size_t block) {
  if (a.size() != n * n) raise(errc::ShapeMismatch, "matrix storage is not n*n");
  if (block == 0) block = 64;
  for (std::size_t j0 = 0; j0 < n; j0 += block) {
    const std::size_t j1 = std::min(j0 + block, n);
    factor_diag_block(a.data(), n, j0, j1);
    // Panel solve: rows below the block against L11^T.
    for (std::size_t i = j1; i < n; ++i) {
      for (std::size_t j = j0; j < j1; ++j) {
        double s = a[i * n + j];
        for (std::size_t k = j0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
        a[i * n + j] = s / a[j * n + j];
      }
    }
    // Trailing update A22 -= L21 L21^T, lower triangle only.
    for (std::size_t i = j1; i < n; ++i) {
      for (std::size_t j = j1; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t k = j0; k < j1; ++k) s += a[i * n + k] * a[j * n + k];
        a[i * n + j] -= s;
      }
    }
  }
}

void cholesky_solve_in_place(const std::vector<double>& l, std::size_t n, double* b,
                             std::size_t m) {
  if (l.size() != n * n) raise(errc::ShapeMismatch, "factor storage is not n*n");
  // Forward: L y = B, streaming over the m columns of each row.
  for (std::size_t i = 0; i < n; ++i) {
    double* bi = b + i * m;
    for (std::size_t k = 0; k < i; ++k) {
      const double lik = l[i * n + k];
      if (lik == 0.0) continue;
      const double* bk = b + k * m;
      for (std::size_t c = 0; c < m; ++c) bi[c] -= lik * bk[c];
    }
    const double inv = 1.0 / l[i * n + i];
    for (std::size_t c = 0; c < m; ++c) bi[c] *= inv;
  }
  // Backward: L^T x = y.
  for (std::size_t ii = n; ii-- > 0;) {
    double* bi = b + ii * m;
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double lki = l[k * n + ii];
      if (lki == 0.0) continue;
      const double* bk = b + k * m;
      for (std::size_t c = 0; c < m; ++c) bi[c] -= lki * bk[c];
    }
    const double inv = 1.0 / l[ii * n + ii];
    for (std::size_t c = 0; c < m; ++c) bi[c] *= inv;
  }
}

}  // namespace cardiograph
