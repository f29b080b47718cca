#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "covtest/complex_matrix.hpp"

namespace covtest {

// L vectors of dimension N, stacked into one L*N observation.
struct BlockGeometry {
    std::size_t l = 0;
    std::size_t n = 0;

    std::size_t dim() const { return l * n; }
    bool valid() const { return l >= 1 && n >= 1; }
    bool operator==(const BlockGeometry&) const = default;
};

enum class ScenarioKind {
    correlation,
    sphericity,
    latent_correlation,
    latent_sphericity,
};

const char* to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& s);

// A labeled pair of true covariance matrices plus the block geometry.
// `descriptor` carries the construction parameters (omega, SNR, seeds) so a
// run can be serialized for provenance and rebuilt exactly.
struct Scenario {
    BlockGeometry geometry;
    ScenarioKind kind = ScenarioKind::correlation;
    ComplexMatrix r_h0;
    ComplexMatrix r_h1;
    std::string descriptor;  // JSON text, see scenario_to_json
};

// H1: (F Omega F^H) kron I_N, H0: identity. All omega must be positive.
Scenario scenario_circulant(BlockGeometry geometry, std::span<const double> omega,
                            ScenarioKind kind = ScenarioKind::correlation);

// H1: h h^H + noise, H0: noise. For latent_correlation the noise must be
// block-diagonal; for latent_sphericity it must equal I_L kron R0.
Scenario scenario_latent(BlockGeometry geometry, const ComplexMatrix& h,
                         const ComplexMatrix& noise, ScenarioKind kind);

// Draws an i.i.d. complex Gaussian channel of rank p and scales it so that
// tr(H H^H) / tr(noise) == snr. Null r0 means identity noise.
Scenario make_latent_scenario(BlockGeometry geometry, std::size_t p, double snr,
                              std::uint64_t channel_seed, const ComplexMatrix* r0,
                              ScenarioKind kind);

std::vector<double> equispaced_omega(std::size_t l, double lo = 0.5, double hi = 1.5);

std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);

}  // namespace covtest
