#pragma once

#include <cstddef>
#include <vector>

namespace cardiograph {

// In-place lower-triangular Cholesky A = L L^T of a row-major n x n symmetric
// matrix. Only the lower triangle is read; it is overwritten by L and the
// strict upper triangle is left untouched. A non-positive (or non-finite)
// pivot raises NotSPD — no jitter is added.
void cholesky_factor(std::vector<double>& a, std::size_t n);

// Right-looking blocked variant of the same factorization.
void cholesky_factor_blocked(std::vector<double>& a, std::size_t n, std::size_t block = 64);

// Solves L L^T X = B in place, where l holds the factor from cholesky_factor
// and b is a row-major n x m right-hand-side matrix (each column one system).
void cholesky_solve_in_place(const std::vector<double>& l, std::size_t n, double* b,
                             std::size_t m);

}  // namespace cardiograph
