#pragma once

#include <optional>
#include <string_view>

#include "covtest/sampling.hpp"

namespace covtest {

// All statistics are oriented so that larger values favor H1. The GLRT
// statistics are therefore the negated log-determinants; raw_value() gives
// back the untouched sign.
enum class DetectorId {
    lmpit_corr,
    glrt_corr,
    lmpit_sph,
    glrt_sph,
    umpit_corr,  // |c12| at L=2, N=1
    umpit_sph,   // largest eigenvalue of the normalized covariance, L=2, N=1
};

inline constexpr DetectorId kAllDetectors[] = {
    DetectorId::lmpit_corr, DetectorId::glrt_corr, DetectorId::lmpit_sph,
    DetectorId::glrt_sph,   DetectorId::umpit_corr, DetectorId::umpit_sph,
};

const char* to_string(DetectorId id);
std::optional<DetectorId> detector_from_string(std::string_view name);

// True for detectors of the correlation test; false for sphericity.
bool correlation_family(DetectorId id);
bool is_glrt(DetectorId id);
bool is_umpit(DetectorId id);

struct DetectorStatistic {
    DetectorId id;
    double value = 0.0;  // oriented, larger favors H1
    BlockGeometry geometry;
    std::size_t m = 0;
};

double raw_value(const DetectorStatistic& s);

// Smallest sample count for which the statistic is defined: N for the LMPIT
// and UMPIT statistics (per-block invertibility), L*N for the GLRTs (the
// determinant needs a full-rank sample covariance).
std::size_t min_samples(DetectorId id, BlockGeometry geometry);

// ||c_hat||^2. Checks that the diagonal blocks are identity within 1e-8.
DetectorStatistic lmpit_correlation(const ComplexMatrix& c_hat, BlockGeometry geometry,
                                    std::size_t m = 0);

// -log det(c_hat); non-negative by Fischer's inequality.
DetectorStatistic glrt_correlation(const ComplexMatrix& c_hat, BlockGeometry geometry,
                                   std::size_t m = 0);

// ||r_tilde||^2. Checks trace(r_tilde) == L*N within relative 1e-6.
DetectorStatistic lmpit_sphericity(const ComplexMatrix& r_tilde, BlockGeometry geometry,
                                   std::size_t m = 0);

// -log det(r_tilde); non-negative by AM-GM under the fixed trace.
DetectorStatistic glrt_sphericity(const ComplexMatrix& r_tilde, BlockGeometry geometry,
                                  std::size_t m = 0);

// The two scalar special cases, defined only for L=2, N=1.
DetectorStatistic umpit_scalar(const SampleSet& data, DetectorId which);

// Full pipeline: sample covariance -> coherence / normalized covariance ->
// statistic. Validates the geometry and sample-count preconditions.
DetectorStatistic evaluate(DetectorId id, const SampleSet& data);

// Same pipeline when several detectors share one dataset; the sufficient
// statistics are computed once.
std::vector<DetectorStatistic> evaluate_all(std::span<const DetectorId> ids,
                                            const SampleSet& data);

}  // namespace covtest
