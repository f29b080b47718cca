#include "covtest/sampling.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "covtest/errors.hpp"
#include "covtest/kernels.hpp"
#include "covtest/linalg.hpp"
#include "covtest/rng.hpp"

namespace covtest {

namespace {

bool exactly_identity(const ComplexMatrix& a) {
    if (!a.square()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) != cdouble(i == j ? 1.0 : 0.0, 0.0)) return false;
    return true;
}

ComplexMatrix hermitian_average(const ComplexMatrix& a) {
    ComplexMatrix s(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            s(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
    return s;
}

// C = W R W with W block-diagonal (one block per vector, or one shared block).
ComplexMatrix block_whiten(const ComplexMatrix& r, BlockGeometry g,
                           const std::vector<ComplexMatrix>& w) {
    const std::size_t n = g.n;
    const auto& ops = kernels::active();
    ComplexMatrix out(g.dim(), g.dim());
    ComplexMatrix tmp(n, n), blk(n, n);
    for (std::size_t k = 0; k < g.l; ++k) {
        const ComplexMatrix& wk = w.size() == 1 ? w[0] : w[k];
        for (std::size_t l = 0; l < g.l; ++l) {
            const ComplexMatrix& wl = w.size() == 1 ? w[0] : w[l];
            const ComplexMatrix rkl = r.block(k * n, l * n, n, n);
            std::fill(tmp.data(), tmp.data() + n * n, cdouble(0.0, 0.0));
            ops.matmul_acc(wk.data(), rkl.data(), tmp.data(), n, n, n);
            std::fill(blk.data(), blk.data() + n * n, cdouble(0.0, 0.0));
            ops.matmul_acc(tmp.data(), wl.data(), blk.data(), n, n, n);
            out.set_block(k * n, l * n, blk);
        }
    }
    return hermitian_average(out);
}

}  // namespace

GaussianSampler::GaussianSampler(const ComplexMatrix& cov, BlockGeometry geometry)
    : geometry_(geometry) {
    if (!geometry.valid()) throw GeometryMismatchError("GaussianSampler: invalid geometry");
    if (cov.rows() != geometry.dim() || cov.cols() != geometry.dim())
        throw GeometryMismatchError("GaussianSampler: covariance does not match geometry");
    identity_ = exactly_identity(cov);
    if (!identity_) root_ = hermitian_sqrt(cov);
}

SampleSet GaussianSampler::draw(std::size_t m, std::uint64_t seed, std::uint64_t stream) const {
    if (m < 1) throw InsufficientSamplesError("sample_gaussian: m must be at least 1");
    const std::size_t dim = geometry_.dim();
    SampleSet out;
    out.geometry = geometry_;
    out.m = m;
    out.seed_record = {seed, stream};
    out.data.resize(m * dim);

    Philox rng(seed, stream);
    if (identity_) {
        for (cdouble& z : out.data) z = rng.next_cgaussian();
        return out;
    }
    std::vector<cdouble> z(dim);
    const auto& ops = kernels::active();
    for (std::size_t k = 0; k < m; ++k) {
        for (cdouble& zi : z) zi = rng.next_cgaussian();
        ops.matvec(root_.data(), dim, dim, z.data(), out.sample(k));
    }
    return out;
}

SampleSet sample_gaussian(const ComplexMatrix& cov, BlockGeometry geometry, std::size_t m,
                          std::uint64_t seed, std::uint64_t stream) {
    return GaussianSampler(cov, geometry).draw(m, seed, stream);
}

ComplexMatrix sample_covariance(const SampleSet& data) {
    if (data.m < 1) throw InsufficientSamplesError("sample_covariance: empty sample set");
    const std::size_t dim = data.geometry.dim();
    ComplexMatrix r(dim, dim);
    const auto& ops = kernels::active();
    for (std::size_t k = 0; k < data.m; ++k) {
        ops.herk_upper(data.sample(k), dim, r.data());
    }
    const double inv_m = 1.0 / static_cast<double>(data.m);
    for (std::size_t i = 0; i < dim; ++i) {
        r(i, i) = cdouble(r(i, i).real() * inv_m, 0.0);
        for (std::size_t j = i + 1; j < dim; ++j) {
            r(i, j) *= inv_m;
            r(j, i) = std::conj(r(i, j));
        }
    }
    return r;
}

ComplexMatrix coherence(const ComplexMatrix& r_hat, BlockGeometry geometry) {
    if (r_hat.rows() != geometry.dim() || r_hat.cols() != geometry.dim())
        throw GeometryMismatchError("coherence: matrix does not match geometry");
    std::vector<ComplexMatrix> w;
    w.reserve(geometry.l);
    for (std::size_t k = 0; k < geometry.l; ++k) {
        const ComplexMatrix dk = r_hat.block(k * geometry.n, k * geometry.n, geometry.n, geometry.n);
        w.push_back(hermitian_sqrt(dk, /*inverse=*/true));
    }
    return block_whiten(r_hat, geometry, w);
}

ComplexMatrix normalized_covariance(const ComplexMatrix& r_hat, BlockGeometry geometry) {
    if (r_hat.rows() != geometry.dim() || r_hat.cols() != geometry.dim())
        throw GeometryMismatchError("normalized_covariance: matrix does not match geometry");
    ComplexMatrix r0(geometry.n, geometry.n);
    for (std::size_t k = 0; k < geometry.l; ++k)
        r0 += r_hat.block(k * geometry.n, k * geometry.n, geometry.n, geometry.n);
    r0 *= cdouble(1.0 / static_cast<double>(geometry.l), 0.0);
    std::vector<ComplexMatrix> w;
    w.push_back(hermitian_sqrt(r0, /*inverse=*/true));
    return block_whiten(r_hat, geometry, w);
}

SampleStats compute_stats(const SampleSet& data) {
    SampleStats st;
    st.geometry = data.geometry;
    st.r_hat = sample_covariance(data);
    if (data.m >= data.geometry.n) {
        st.c_hat = coherence(st.r_hat, data.geometry);
        st.r_tilde = normalized_covariance(st.r_hat, data.geometry);
    }
    return st;
}

void write_samples_csv(std::ostream& os, const SampleSet& data) {
    const std::size_t dim = data.geometry.dim();
    for (std::size_t j = 0; j < dim; ++j) {
        if (j) os << ',';
        os << "re_" << j << ",im_" << j;
    }
    os << '\n';
    os.precision(17);
    for (std::size_t k = 0; k < data.m; ++k) {
        const cdouble* x = data.sample(k);
        for (std::size_t j = 0; j < dim; ++j) {
            if (j) os << ',';
            os << x[j].real() << ',' << x[j].imag();
        }
        os << '\n';
    }
}

SampleSet read_samples_csv(std::istream& is, BlockGeometry geometry) {
    if (!geometry.valid()) throw GeometryMismatchError("read_samples_csv: invalid geometry");
    const std::size_t dim = geometry.dim();
    std::string line;
    if (!std::getline(is, line)) throw Error("read_samples_csv: empty input");
    {
        std::ostringstream expect;
        for (std::size_t j = 0; j < dim; ++j) {
            if (j) expect << ',';
            expect << "re_" << j << ",im_" << j;
        }
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != expect.str())
            throw Error("read_samples_csv: header does not match geometry (expected " +
                        expect.str().substr(0, 32) + "...)");
    }
    SampleSet out;
    out.geometry = geometry;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> vals;
        vals.reserve(2 * dim);
        while (std::getline(row, cell, ',')) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &pos);
            } catch (const std::exception&) {
                throw Error("read_samples_csv: non-numeric cell '" + cell + "'");
            }
            if (pos != cell.size()) throw Error("read_samples_csv: trailing junk in cell '" + cell + "'");
            if (!std::isfinite(v)) throw Error("read_samples_csv: non-finite value");
            vals.push_back(v);
        }
        if (vals.size() != 2 * dim)
            throw Error("read_samples_csv: row has " + std::to_string(vals.size()) +
                        " values, expected " + std::to_string(2 * dim));
        for (std::size_t j = 0; j < dim; ++j) out.data.emplace_back(vals[2 * j], vals[2 * j + 1]);
        ++out.m;
    }
    if (out.m == 0) throw Error("read_samples_csv: no sample rows");
    return out;
}

}  // namespace covtest
