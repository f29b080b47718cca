#include <doctest.h>

#include <cmath>
#include <vector>

#include "covtest/kernels.hpp"
#include "covtest/rng.hpp"

namespace k = covtest::kernels;
using covtest::Philox;
using k::cdouble;

namespace {

std::vector<cdouble> random_vec(Philox& rng, std::size_t n) {
    std::vector<cdouble> v(n);
    for (cdouble& z : v) z = rng.next_cgaussian();
    return v;
}

double max_err(const std::vector<cdouble>& a, const std::vector<cdouble>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double scale_of(const std::vector<cdouble>& a) {
    double s = 1.0;
    for (const cdouble& z : a) s = std::max(s, std::abs(z));
    return s;
}

}  // namespace

TEST_CASE("avx2 kernels match the scalar reference") {
    const k::Ops* vec = k::avx2_ops();
    if (!vec) return;  // CPU or build without AVX2: nothing to compare
    const k::Ops& ref = k::scalar_ops();
    Philox rng(11, 0);

    for (std::size_t n : {1u, 2u, 3u, 7u, 8u, 33u, 64u}) {
        CAPTURE(n);
        const auto x = random_vec(rng, n);
        const cdouble w = rng.next_cgaussian();

        // axpy / axpy_conj
        auto y1 = random_vec(rng, n);
        auto y2 = y1;
        ref.axpy(w, x.data(), y1.data(), n);
        vec->axpy(w, x.data(), y2.data(), n);
        CHECK(max_err(y1, y2) < 1e-13 * scale_of(y1));

        y2 = y1;
        auto y3 = y1;
        ref.axpy_conj(w, x.data(), y2.data(), n);
        vec->axpy_conj(w, x.data(), y3.data(), n);
        CHECK(max_err(y2, y3) < 1e-13 * scale_of(y2));

        // matvec
        const std::size_t m = (n % 3) + 2;
        const auto a = random_vec(rng, m * n);
        std::vector<cdouble> r1(m), r2(m);
        ref.matvec(a.data(), m, n, x.data(), r1.data());
        vec->matvec(a.data(), m, n, x.data(), r2.data());
        CHECK(max_err(r1, r2) < 1e-12 * scale_of(r1) * static_cast<double>(n));

        // frob_sq
        const double f1 = ref.frob_sq(x.data(), n);
        const double f2 = vec->frob_sq(x.data(), n);
        CHECK(std::abs(f1 - f2) <= 1e-12 * std::max(1.0, f1));

        // herk_upper
        std::vector<cdouble> g1(n * n, cdouble(0, 0)), g2(n * n, cdouble(0, 0));
        ref.herk_upper(x.data(), n, g1.data());
        vec->herk_upper(x.data(), n, g2.data());
        CHECK(max_err(g1, g2) < 1e-12 * scale_of(g1));
    }

    // matmul_acc on a few shapes
    for (auto [m, kk, n] : {std::array<std::size_t, 3>{2, 3, 4},
                            std::array<std::size_t, 3>{5, 5, 5},
                            std::array<std::size_t, 3>{1, 7, 3}}) {
        const auto a = random_vec(rng, m * kk);
        const auto b = random_vec(rng, kk * n);
        std::vector<cdouble> c1(m * n, cdouble(0, 0)), c2 = c1;
        ref.matmul_acc(a.data(), b.data(), c1.data(), m, kk, n);
        vec->matmul_acc(a.data(), b.data(), c2.data(), m, kk, n);
        CHECK(max_err(c1, c2) < 1e-12 * scale_of(c1) * static_cast<double>(kk));
    }
}

TEST_CASE("scalar kernels compute the expected sums") {
    const k::Ops& ref = k::scalar_ops();
    // matvec against a hand-computed 2x2 complex product
    const std::vector<cdouble> a = {{1, 1}, {0, -2}, {3, 0}, {0, 0}};
    const std::vector<cdouble> x = {{1, 0}, {0, 1}};
    std::vector<cdouble> y(2);
    ref.matvec(a.data(), 2, 2, x.data(), y.data());
    CHECK(std::abs(y[0] - cdouble(3, 1)) < 1e-15);  // (1+i) + (-2i)(i) = 3+i
    CHECK(std::abs(y[1] - cdouble(3, 0)) < 1e-15);

    // herk_upper accumulates x x^H on the upper triangle
    const std::vector<cdouble> v = {{1, 0}, {0, 1}};
    std::vector<cdouble> g(4, cdouble(0, 0));
    ref.herk_upper(v.data(), 2, g.data());
    CHECK(std::abs(g[0] - cdouble(1, 0)) < 1e-15);
    CHECK(std::abs(g[1] - cdouble(0, -1)) < 1e-15);  // v0 * conj(v1)
    CHECK(std::abs(g[3] - cdouble(1, 0)) < 1e-15);

    CHECK(ref.frob_sq(v.data(), 2) == doctest::Approx(2.0));
}

TEST_CASE("active kernel dispatch is stable") {
    const k::Ops& first = k::active();
    const k::Ops& second = k::active();
    CHECK(&first == &second);
    CHECK((std::string(first.name) == "scalar" || std::string(first.name) == "avx2"));
}
