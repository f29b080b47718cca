#include <doctest.h>

#include <cmath>

#include "covtest/detectors.hpp"
#include "covtest/errors.hpp"
#include "covtest/linalg.hpp"
#include "covtest/model.hpp"

using covtest::BlockGeometry;
using covtest::cdouble;
using covtest::ComplexMatrix;
using covtest::DetectorId;
using covtest::SampleSet;

namespace {

// The two 3x3 coherence matrices that share eigenvalues {0.5, 1, 1.5} but sit
// on different group orbits.
ComplexMatrix example_c1() {
    return ComplexMatrix({{1.0, 0.5, 0.0}, {0.5, 1.0, 0.0}, {0.0, 0.0, 1.0}});
}
ComplexMatrix example_c2() {
    return ComplexMatrix({{1.0, 0.0, 0.4}, {0.0, 1.0, 0.3}, {0.4, 0.3, 1.0}});
}

}  // namespace

TEST_CASE("lmpit correlation statistic") {
    const BlockGeometry g{3, 1};
    CHECK(covtest::lmpit_correlation(ComplexMatrix::identity(3), g).value ==
          doctest::Approx(3.0));
    CHECK(covtest::lmpit_correlation(example_c1(), g).value == doctest::Approx(3.5));
    CHECK(covtest::lmpit_correlation(example_c2(), g).value == doctest::Approx(3.5));

    const ComplexMatrix c({{1.0, 0.5}, {0.5, 1.0}});
    CHECK(covtest::lmpit_correlation(c, {2, 1}).value == doctest::Approx(2.5));
}

TEST_CASE("lmpit correlation rejects a non-coherence input") {
    const ComplexMatrix r({{4.0, 2.0}, {2.0, 4.0}});
    CHECK_THROWS_AS(covtest::lmpit_correlation(r, {2, 1}), covtest::MalformedCoherenceError);
}

TEST_CASE("glrt correlation statistic") {
    const BlockGeometry g{3, 1};
    CHECK(covtest::glrt_correlation(ComplexMatrix::identity(3), g).value ==
          doctest::Approx(0.0));
    const double expect = -std::log(0.75);  // both reference matrices have det 0.75
    CHECK(covtest::glrt_correlation(example_c1(), g).value == doctest::Approx(expect));
    CHECK(covtest::glrt_correlation(example_c2(), g).value == doctest::Approx(expect));
    CHECK(covtest::raw_value(covtest::glrt_correlation(example_c1(), g)) ==
          doctest::Approx(std::log(0.75)));
}

TEST_CASE("lmpit sphericity statistic") {
    CHECK(covtest::lmpit_sphericity(ComplexMatrix::identity(6), {3, 2}).value ==
          doctest::Approx(6.0));
    const ComplexMatrix r({{1.0, 0.5}, {0.5, 1.0}});  // eigenvalues 1.5, 0.5
    CHECK(covtest::lmpit_sphericity(r, {2, 1}).value == doctest::Approx(2.5));

    // random trace-normalized instance equals the sum of squared eigenvalues
    const ComplexMatrix base({{2.0, cdouble(0.5, 0.5), 0.0},
                              {cdouble(0.5, -0.5), 1.0, cdouble(0.0, 0.25)},
                              {0.0, cdouble(0.0, -0.25), 1.0}});
    ComplexMatrix scaled = base * (3.0 / base.trace().real());
    const auto e = covtest::hermitian_evd(scaled);
    double expect = 0.0;
    for (double v : e.eigenvalues) expect += v * v;
    CHECK(covtest::lmpit_sphericity(scaled, {3, 1}).value ==
          doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("lmpit sphericity rejects a wrong trace") {
    CHECK_THROWS_AS(covtest::lmpit_sphericity(2.0 * ComplexMatrix::identity(4), {2, 2}),
                    covtest::MalformedNormalizedCovarianceError);
}

TEST_CASE("glrt sphericity statistic") {
    CHECK(covtest::glrt_sphericity(ComplexMatrix::identity(4), {2, 2}).value ==
          doctest::Approx(0.0));
    const ComplexMatrix r({{1.0, 0.5}, {0.5, 1.0}});
    CHECK(covtest::glrt_sphericity(r, {2, 1}).value == doctest::Approx(-std::log(0.75)));
}

TEST_CASE("scalar umpit detectors") {
    const BlockGeometry g{2, 1};
    // identical channels: perfect correlation
    SampleSet ident;
    ident.geometry = g;
    ident.m = 3;
    for (int k = 0; k < 3; ++k) {
        const cdouble z(1.0 + k, -0.5 * k);
        ident.data.push_back(z);
        ident.data.push_back(z);
    }
    CHECK(covtest::umpit_scalar(ident, DetectorId::umpit_corr).value == doctest::Approx(1.0));

    // orthogonal pair: coherence is exactly identity
    SampleSet orth;
    orth.geometry = g;
    orth.m = 2;
    orth.data = {cdouble(1, 0), cdouble(0, 0), cdouble(0, 0), cdouble(1, 0)};
    CHECK(covtest::umpit_scalar(orth, DetectorId::umpit_corr).value == doctest::Approx(0.0));
    CHECK(covtest::umpit_scalar(orth, DetectorId::umpit_sph).value == doctest::Approx(1.0));

    // R-hat = [[1, .5], [.5, 1]] built from its eigenvectors
    SampleSet mid;
    mid.geometry = g;
    mid.m = 2;
    const double s1 = std::sqrt(3.0) / std::sqrt(2.0);
    const double s2 = 1.0 / std::sqrt(2.0);
    mid.data = {cdouble(s1, 0), cdouble(s1, 0), cdouble(s2, 0), cdouble(-s2, 0)};
    CHECK(covtest::umpit_scalar(mid, DetectorId::umpit_corr).value == doctest::Approx(0.5));
    CHECK(covtest::umpit_scalar(mid, DetectorId::umpit_sph).value == doctest::Approx(1.5));
}

TEST_CASE("umpit requires L=2 N=1") {
    const SampleSet s = covtest::sample_gaussian(ComplexMatrix::identity(4), {2, 2}, 10, 1, 0);
    CHECK_THROWS_AS(covtest::umpit_scalar(s, DetectorId::umpit_corr),
                    covtest::WrongGeometryError);
    CHECK_THROWS_AS(covtest::evaluate(DetectorId::umpit_sph, s), covtest::WrongGeometryError);
}

TEST_CASE("evaluate enforces sample-count preconditions") {
    const BlockGeometry g{3, 2};
    const SampleSet s3 = covtest::sample_gaussian(ComplexMatrix::identity(6), g, 3, 4, 0);
    // LMPIT works from M >= N even though M < L*N
    CHECK_NOTHROW(covtest::evaluate(DetectorId::lmpit_corr, s3));
    CHECK_THROWS_AS(covtest::evaluate(DetectorId::glrt_corr, s3),
                    covtest::InsufficientSamplesError);
    const SampleSet s1 = covtest::sample_gaussian(ComplexMatrix::identity(6), g, 1, 4, 0);
    CHECK_THROWS_AS(covtest::evaluate(DetectorId::lmpit_corr, s1),
                    covtest::InsufficientSamplesError);
}

TEST_CASE("evaluate is consistent under the null at large M") {
    const BlockGeometry g{2, 2};
    const SampleSet s = covtest::sample_gaussian(ComplexMatrix::identity(4), g, 100000, 8, 0);
    const double v = covtest::evaluate(DetectorId::lmpit_corr, s).value;
    CHECK(v == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("umpit and lmpit are algebraically locked at L=2 N=1") {
    const BlockGeometry g{2, 1};
    for (std::uint64_t t = 0; t < 50; ++t) {
        const SampleSet s = covtest::sample_gaussian(ComplexMatrix::identity(2), g, 12, 99, t);
        const double lm = covtest::evaluate(DetectorId::lmpit_corr, s).value;
        const double um = covtest::evaluate(DetectorId::umpit_corr, s).value;
        CHECK(lm == doctest::Approx(2.0 + 2.0 * um * um).epsilon(1e-12));
    }
}

TEST_CASE("statistic bounds and orientation signs") {
    const BlockGeometry g{3, 2};
    for (std::uint64_t t = 0; t < 20; ++t) {
        const SampleSet s = covtest::sample_gaussian(ComplexMatrix::identity(6), g, 8, 5, t);
        const double v = covtest::evaluate(DetectorId::lmpit_corr, s).value;
        CHECK(v >= 6.0 - 1e-9);
        CHECK(v <= 18.0 + 1e-9);  // L^2 N
        // oriented GLRTs are non-negative (Fischer / AM-GM)
        CHECK(covtest::evaluate(DetectorId::glrt_corr, s).value >= -1e-12);
        CHECK(covtest::evaluate(DetectorId::glrt_sph, s).value >= -1e-12);
        CHECK(covtest::evaluate(DetectorId::lmpit_sph, s).value >= 6.0 - 1e-9);
    }
}

TEST_CASE("sample covariance is invertible from M = L*N on") {
    const BlockGeometry g{3, 2};
    for (std::uint64_t t = 0; t < 30; ++t) {
        const SampleSet s = covtest::sample_gaussian(ComplexMatrix::identity(6), g, 6, 13, t);
        CAPTURE(t);  // a singular draw would be a seed-reportable failure
        CHECK_NOTHROW(covtest::logdet_pd(covtest::sample_covariance(s)));
    }
}

TEST_CASE("every statistic separates the circulant scenario") {
    const BlockGeometry g{3, 2};
    const covtest::Scenario sc = covtest::scenario_circulant(g, covtest::equispaced_omega(3));
    const covtest::GaussianSampler h0(sc.r_h0, g), h1(sc.r_h1, g);
    const DetectorId ids[] = {DetectorId::lmpit_corr, DetectorId::glrt_corr,
                              DetectorId::lmpit_sph, DetectorId::glrt_sph};
    const int trials = 400;
    const std::size_t m = 30;
    for (DetectorId id : ids) {
        CAPTURE(covtest::to_string(id));
        double sum0 = 0, sum1 = 0, sq0 = 0, sq1 = 0;
        for (int t = 0; t < trials; ++t) {
            const double v0 = covtest::evaluate(id, h0.draw(m, 31, 2 * t)).value;
            const double v1 = covtest::evaluate(id, h1.draw(m, 31, 2 * t + 1)).value;
            sum0 += v0;
            sum1 += v1;
            sq0 += v0 * v0;
            sq1 += v1 * v1;
        }
        const double m0 = sum0 / trials, m1 = sum1 / trials;
        const double var0 = sq0 / trials - m0 * m0, var1 = sq1 / trials - m1 * m1;
        const double se = std::sqrt((var0 + var1) / trials);
        CHECK(m1 - m0 > 5.0 * se);  // larger values favor H1
    }
}

TEST_CASE("detector names round-trip") {
    for (DetectorId id : covtest::kAllDetectors) {
        const auto back = covtest::detector_from_string(covtest::to_string(id));
        REQUIRE(back.has_value());
        CHECK(*back == id);
    }
    CHECK_FALSE(covtest::detector_from_string("nope").has_value());
}
