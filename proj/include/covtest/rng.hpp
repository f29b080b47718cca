#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace covtest {

// Philox4x32-10 counter-based generator, one instance per (seed, stream)
// pair. Distinct streams are statistically independent, so Monte Carlo code
// assigns stream = trial index and draws trials in any order or thread
// without changing the numbers.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    // 53-bit uniform on (0, 1]; never returns 0, so log() is safe.
    double next_uniform();

    // Standard normal via Box-Muller (pairs cached).
    double next_gaussian();

    // Circular complex normal with E|z|^2 = 1 (re/im variance 1/2 each).
    // Consumes exactly one Box-Muller pair; does not touch the real cache.
    std::complex<double> next_cgaussian();

    // Unbiased uniform integer on [0, n), n >= 1.
    std::uint64_t next_below(std::uint64_t n);

private:
    std::array<std::uint32_t, 4> refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    unsigned buf_pos_ = 4;
    double gauss_cache_ = 0.0;
    bool has_gauss_ = false;
};

namespace detail {
// Raw keyed block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);
}

}  // namespace covtest
