#include "covtest/kernels.hpp"

// Reference kernels. Complex products are written out on real/imag parts so
// the compiler does not route them through __muldc3.

namespace covtest::kernels {
namespace {

void matvec_scalar(const cdouble* a, std::size_t m, std::size_t n, const cdouble* x,
                   cdouble* y) {
    for (std::size_t i = 0; i < m; ++i) {
        const cdouble* r = a + i * n;
        double sr = 0.0, si = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double ar = r[j].real(), ai = r[j].imag();
            const double xr = x[j].real(), xi = x[j].imag();
            sr += ar * xr - ai * xi;
            si += ar * xi + ai * xr;
        }
        y[i] = {sr, si};
    }
}

void axpy_scalar(cdouble w, const cdouble* x, cdouble* y, std::size_t n) {
    const double wr = w.real(), wi = w.imag();
    for (std::size_t j = 0; j < n; ++j) {
        const double xr = x[j].real(), xi = x[j].imag();
        y[j] += cdouble(wr * xr - wi * xi, wr * xi + wi * xr);
    }
}

void axpy_conj_scalar(cdouble w, const cdouble* x, cdouble* y, std::size_t n) {
    const double wr = w.real(), wi = w.imag();
    for (std::size_t j = 0; j < n; ++j) {
        const double xr = x[j].real(), xi = -x[j].imag();
        y[j] += cdouble(wr * xr - wi * xi, wr * xi + wi * xr);
    }
}

void matmul_acc_scalar(const cdouble* a, const cdouble* b, cdouble* c, std::size_t m,
                       std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        cdouble* ci = c + i * n;
        const cdouble* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            axpy_scalar(ai[p], b + p * n, ci, n);
        }
    }
}

void herk_upper_scalar(const cdouble* x, std::size_t n, cdouble* r) {
    for (std::size_t i = 0; i < n; ++i) {
        axpy_conj_scalar(x[i], x + i, r + i * n + i, n - i);
    }
}

double frob_sq_scalar(const cdouble* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        s += x[j].real() * x[j].real() + x[j].imag() * x[j].imag();
    }
    return s;
}

const Ops kScalarOps = {
    "scalar", matvec_scalar, axpy_scalar, axpy_conj_scalar,
    matmul_acc_scalar, herk_upper_scalar, frob_sq_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace covtest::kernels
