#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>

#include "covtest/complex_matrix.hpp"
#include "covtest/model.hpp"

namespace covtest {

struct SeedRecord {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    bool operator==(const SeedRecord&) const = default;
};

// M observations of dimension L*N, stored contiguously one sample per row.
struct SampleSet {
    BlockGeometry geometry;
    std::size_t m = 0;
    std::vector<cdouble> data;  // m * geometry.dim(), row-major
    SeedRecord seed_record;

    cdouble* sample(std::size_t i) { return data.data() + i * geometry.dim(); }
    const cdouble* sample(std::size_t i) const { return data.data() + i * geometry.dim(); }
    bool operator==(const SampleSet&) const = default;
};

// Caches the Hermitian square root of the covariance so many trials can be
// drawn without refactorizing.
class GaussianSampler {
public:
    GaussianSampler(const ComplexMatrix& cov, BlockGeometry geometry);

    SampleSet draw(std::size_t m, std::uint64_t seed, std::uint64_t stream) const;

private:
    BlockGeometry geometry_;
    ComplexMatrix root_;
    bool identity_ = false;
};

// x[k] = cov^{1/2} z[k] with z i.i.d. circular standard complex normal.
SampleSet sample_gaussian(const ComplexMatrix& cov, BlockGeometry geometry,
                          std::size_t m, std::uint64_t seed, std::uint64_t stream);

// (1/M) sum x x^H. Hermitian PSD by construction.
ComplexMatrix sample_covariance(const SampleSet& data);

// D^{-1/2} R D^{-1/2} with D the block diagonal of r_hat. Diagonal blocks of
// the result are identity. Throws NotPositiveDefiniteError when a diagonal
// block is singular (too few samples).
ComplexMatrix coherence(const ComplexMatrix& r_hat, BlockGeometry geometry);

// (I kron R0)^{-1/2} R (I kron R0)^{-1/2} with R0 the average of the diagonal
// blocks. The result has trace L*N.
ComplexMatrix normalized_covariance(const ComplexMatrix& r_hat, BlockGeometry geometry);

struct SampleStats {
    BlockGeometry geometry;
    ComplexMatrix r_hat;
    std::optional<ComplexMatrix> c_hat;    // present when m >= n
    std::optional<ComplexMatrix> r_tilde;  // present when m >= n
};

SampleStats compute_stats(const SampleSet& data);

// CSV interchange: header re_0,im_0,...,re_{d-1},im_{d-1}, one sample per row.
void write_samples_csv(std::ostream& os, const SampleSet& data);
SampleSet read_samples_csv(std::istream& is, BlockGeometry geometry);

}  // namespace covtest
