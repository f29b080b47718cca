#pragma once

#include <complex>
#include <cstddef>

namespace covtest::kernels {

using cdouble = std::complex<double>;

// Data-parallel inner loops behind the matrix layer. There is one scalar
// reference implementation and an AVX2/FMA variant selected at runtime;
// the two are equivalence-tested against each other (agreement to rounding,
// not bit-exact, since the vector path reassociates the accumulation).
struct Ops {
    const char* name;
    // y = A x with A m-by-n row-major.
    void (*matvec)(const cdouble* a, std::size_t m, std::size_t n,
                   const cdouble* x, cdouble* y);
    // y += w x
    void (*axpy)(cdouble w, const cdouble* x, cdouble* y, std::size_t n);
    // y += w conj(x)
    void (*axpy_conj)(cdouble w, const cdouble* x, cdouble* y, std::size_t n);
    // C += A B with (m x k)(k x n), all row-major.
    void (*matmul_acc)(const cdouble* a, const cdouble* b, cdouble* c,
                       std::size_t m, std::size_t k, std::size_t n);
    // Upper triangle of r += x x^H with r n-by-n row-major.
    void (*herk_upper)(const cdouble* x, std::size_t n, cdouble* r);
    // Sum of squared moduli over n complex entries.
    double (*frob_sq)(const cdouble* x, std::size_t n);
};

const Ops& scalar_ops();

// Null when the build target or the running CPU lacks AVX2+FMA.
const Ops* avx2_ops();

// Implementation used by the library. Selected once per process:
// COVTEST_KERNELS=scalar|avx2 overrides the CPU autodetection.
const Ops& active();

namespace detail {
const Ops* avx2_table();
}

}  // namespace covtest::kernels
