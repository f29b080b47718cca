#include "covtest/detectors.hpp"

#include <cmath>

#include "covtest/errors.hpp"
#include "covtest/linalg.hpp"

namespace covtest {

const char* to_string(DetectorId id) {
    switch (id) {
        case DetectorId::lmpit_corr: return "lmpit-corr";
        case DetectorId::glrt_corr: return "glrt-corr";
        case DetectorId::lmpit_sph: return "lmpit-sph";
        case DetectorId::glrt_sph: return "glrt-sph";
        case DetectorId::umpit_corr: return "umpit-corr";
        case DetectorId::umpit_sph: return "umpit-sph";
    }
    return "?";
}

std::optional<DetectorId> detector_from_string(std::string_view name) {
    for (DetectorId id : kAllDetectors)
        if (name == to_string(id)) return id;
    return std::nullopt;
}

bool correlation_family(DetectorId id) {
    return id == DetectorId::lmpit_corr || id == DetectorId::glrt_corr ||
           id == DetectorId::umpit_corr;
}

bool is_glrt(DetectorId id) {
    return id == DetectorId::glrt_corr || id == DetectorId::glrt_sph;
}

bool is_umpit(DetectorId id) {
    return id == DetectorId::umpit_corr || id == DetectorId::umpit_sph;
}

double raw_value(const DetectorStatistic& s) {
    return is_glrt(s.id) ? -s.value : s.value;
}

std::size_t min_samples(DetectorId id, BlockGeometry geometry) {
    return is_glrt(id) ? geometry.dim() : geometry.n;
}

namespace {

void check_block_geometry(const ComplexMatrix& a, BlockGeometry g, const char* who) {
    if (!g.valid() || a.rows() != g.dim() || a.cols() != g.dim())
        throw GeometryMismatchError(std::string(who) + ": matrix does not match geometry");
}

}  // namespace

DetectorStatistic lmpit_correlation(const ComplexMatrix& c_hat, BlockGeometry geometry,
                                    std::size_t m) {
    check_block_geometry(c_hat, geometry, "lmpit_correlation");
    for (std::size_t k = 0; k < geometry.l; ++k)
        for (std::size_t i = 0; i < geometry.n; ++i)
            for (std::size_t j = 0; j < geometry.n; ++j) {
                const cdouble expect(i == j ? 1.0 : 0.0, 0.0);
                if (std::abs(c_hat(k * geometry.n + i, k * geometry.n + j) - expect) > 1e-8)
                    throw MalformedCoherenceError(
                        "lmpit_correlation: diagonal blocks are not identity");
            }
    return {DetectorId::lmpit_corr, frobenius_sq(c_hat), geometry, m};
}

DetectorStatistic glrt_correlation(const ComplexMatrix& c_hat, BlockGeometry geometry,
                                   std::size_t m) {
    check_block_geometry(c_hat, geometry, "glrt_correlation");
    return {DetectorId::glrt_corr, -logdet_pd(c_hat), geometry, m};
}

DetectorStatistic lmpit_sphericity(const ComplexMatrix& r_tilde, BlockGeometry geometry,
                                   std::size_t m) {
    check_block_geometry(r_tilde, geometry, "lmpit_sphericity");
    const double tr = r_tilde.trace().real();
    const double ln = static_cast<double>(geometry.dim());
    if (std::abs(tr - ln) > 1e-6 * ln)
        throw MalformedNormalizedCovarianceError("lmpit_sphericity: trace is not L*N");
    return {DetectorId::lmpit_sph, frobenius_sq(r_tilde), geometry, m};
}

DetectorStatistic glrt_sphericity(const ComplexMatrix& r_tilde, BlockGeometry geometry,
                                  std::size_t m) {
    check_block_geometry(r_tilde, geometry, "glrt_sphericity");
    return {DetectorId::glrt_sph, -logdet_pd(r_tilde), geometry, m};
}

namespace {

DetectorStatistic umpit_from_stats(const SampleStats& st, DetectorId which, std::size_t m) {
    const BlockGeometry g = st.geometry;
    if (g.l != 2 || g.n != 1)
        throw WrongGeometryError("umpit_scalar: defined only for L = 2, N = 1");
    if (which == DetectorId::umpit_corr) {
        return {DetectorId::umpit_corr, std::abs((*st.c_hat)(0, 1)), g, m};
    }
    // largest eigenvalue of the 2x2 normalized covariance, closed form
    const ComplexMatrix& rt = *st.r_tilde;
    const double a = rt(0, 0).real(), d = rt(1, 1).real();
    const double mid = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), std::abs(rt(0, 1)));
    return {DetectorId::umpit_sph, mid + rad, g, m};
}

}  // namespace

DetectorStatistic umpit_scalar(const SampleSet& data, DetectorId which) {
    if (!is_umpit(which)) throw Error("umpit_scalar: detector is not a scalar UMPIT");
    if (data.geometry.l != 2 || data.geometry.n != 1)
        throw WrongGeometryError("umpit_scalar: defined only for L = 2, N = 1");
    return umpit_from_stats(compute_stats(data), which, data.m);
}

namespace {

DetectorStatistic evaluate_from_stats(DetectorId id, const SampleStats& st, std::size_t m) {
    switch (id) {
        case DetectorId::lmpit_corr: return lmpit_correlation(*st.c_hat, st.geometry, m);
        case DetectorId::glrt_corr: return glrt_correlation(*st.c_hat, st.geometry, m);
        case DetectorId::lmpit_sph: return lmpit_sphericity(*st.r_tilde, st.geometry, m);
        case DetectorId::glrt_sph: return glrt_sphericity(*st.r_tilde, st.geometry, m);
        case DetectorId::umpit_corr:
        case DetectorId::umpit_sph: return umpit_from_stats(st, id, m);
    }
    throw Error("evaluate: unknown detector");
}

void check_preconditions(DetectorId id, const SampleSet& data) {
    if (is_umpit(id) && (data.geometry.l != 2 || data.geometry.n != 1))
        throw WrongGeometryError(std::string(to_string(id)) + " requires L = 2, N = 1");
    const std::size_t need = min_samples(id, data.geometry);
    if (data.m < need)
        throw InsufficientSamplesError(std::string(to_string(id)) + " requires M >= " +
                                       std::to_string(need) + ", got M = " +
                                       std::to_string(data.m));
}

}  // namespace

DetectorStatistic evaluate(DetectorId id, const SampleSet& data) {
    check_preconditions(id, data);
    return evaluate_from_stats(id, compute_stats(data), data.m);
}

std::vector<DetectorStatistic> evaluate_all(std::span<const DetectorId> ids,
                                            const SampleSet& data) {
    for (DetectorId id : ids) check_preconditions(id, data);
    const SampleStats st = compute_stats(data);
    std::vector<DetectorStatistic> out;
    out.reserve(ids.size());
    for (DetectorId id : ids) out.push_back(evaluate_from_stats(id, st, data.m));
    return out;
}

}  // namespace covtest
