#pragma once

#include <cstddef>
#include <vector>

#include "covtest/complex_matrix.hpp"

namespace covtest {

// Relative asymmetry tolerated before an input is rejected as non-Hermitian.
inline constexpr double kHermitianTol = 1e-9;

// Eigenvalues at or below kPdFloorRel * (largest eigenvalue) fail the
// positive-definiteness check instead of being clamped.
inline constexpr double kPdFloorRel = 1e-12;

struct HermitianEvd {
    std::vector<double> eigenvalues;  // sorted descending
    ComplexMatrix eigenvectors;       // orthonormal columns, phase-fixed
};

struct Svd {
    ComplexMatrix u;
    std::vector<double> singular_values;  // descending, non-negative
    ComplexMatrix v;                      // a = u diag(s) v^H
};

struct Lq {
    ComplexMatrix l;  // lower triangular, real non-negative diagonal
    ComplexMatrix q;  // orthonormal rows
};

struct Qr {
    ComplexMatrix q;  // orthonormal columns (economy)
    ComplexMatrix r;  // upper triangular, diagonal unconstrained
};

// Cyclic complex Jacobi. The input is symmetrized internally; asymmetry
// beyond kHermitianTol (relative) throws NotHermitianError.
HermitianEvd hermitian_evd(const ComplexMatrix& a);

// A^{1/2} (or A^{-1/2}) of a Hermitian positive definite matrix.
ComplexMatrix hermitian_sqrt(const ComplexMatrix& a, bool inverse = false);

// One-sided Jacobi on columns; never forms the Gram matrix explicitly for
// the factors. Deterministic phase convention: the first entry of each left
// singular vector with modulus above 1e-12 is rotated real positive, with
// the matching phase applied to the right vector.
Svd svd(const ComplexMatrix& a);

// a = l q for a with rows <= cols and full row rank.
Lq lq(const ComplexMatrix& a);

// Economy Householder QR; rank deficiency is tolerated (zero diagonal in r).
Qr qr(const ComplexMatrix& a);

// log det of a Hermitian positive definite matrix, via Cholesky pivots.
// Equals the sum of log eigenvalues.
double logdet_pd(const ComplexMatrix& a);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Unitary DFT matrix, entry (j,k) = exp(-2*pi*i*j*k/l) / sqrt(l).
ComplexMatrix dft_matrix(std::size_t l);

double frobenius_sq(const ComplexMatrix& a);
double frobenius_norm(const ComplexMatrix& a);

cdouble determinant(const ComplexMatrix& a);

namespace detail {
// LQ that runs through rank-deficient rows instead of throwing. Zero (or
// near-zero) diagonal entries of l are reported through *deficient.
Lq lq_allow_deficient(const ComplexMatrix& a, bool* deficient);
// Rotate each column so its first entry with modulus > 1e-12 is real positive.
void fix_column_phases(ComplexMatrix& m);
}  // namespace detail

}  // namespace covtest
