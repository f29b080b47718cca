#pragma once

#include <cstdint>
#include <string>

#include "covtest/detectors.hpp"

namespace covtest {

// Regularized lower incomplete gamma P(k/2, x/2). Series for small x,
// continued fraction otherwise; absolute error below 1e-12.
double chi2_cdf(double x, unsigned dof);

// Inverse of chi2_cdf in x, by bracketed bisection: chi2_cdf(result, dof)
// matches p within 1e-10.
double chi2_quantile(double p, unsigned dof);

enum class ThresholdMethod { empirical, wilks };

const char* to_string(ThresholdMethod m);

struct ThresholdRecord {
    DetectorId id;
    BlockGeometry geometry;
    std::size_t m = 0;
    double pfa = 0.0;
    ThresholdMethod method = ThresholdMethod::empirical;
    double threshold = 0.0;  // on the oriented statistic scale
    std::size_t trials = 0;  // empirical only
    std::uint64_t seed = 0;  // empirical only
};

// Degrees of freedom of the asymptotic null chi-squared: (L^2-L)N^2 for the
// correlation family, (L^2-1)N^2 for the sphericity family.
unsigned wilks_dof(DetectorId id, BlockGeometry geometry);

// Asymptotic threshold for the LMPIT statistics:
// L*N + chi2_quantile(1-pfa, dof)/M. The GLRTs are calibrated empirically
// only, so they are rejected here.
ThresholdRecord wilks_threshold(DetectorId id, BlockGeometry geometry, std::size_t m,
                                double pfa);

// Monte Carlo null quantile at R = I (valid for any admissible null
// covariance by invariance). Deterministic given the seed and independent of
// the worker count. Requires trials >= 100/pfa.
ThresholdRecord empirical_threshold(DetectorId id, BlockGeometry geometry, std::size_t m,
                                    double pfa, std::size_t trials, std::uint64_t seed,
                                    unsigned workers = 1);

// Linear interpolation between order statistics at rank (n-1)q + 1 (1-based).
double interpolated_quantile(const std::vector<double>& sorted, double q);

std::string threshold_to_json(const ThresholdRecord& r);
ThresholdRecord threshold_from_json(const std::string& text);

namespace detail {
// Same as empirical_threshold but draws the null data from an arbitrary
// covariance with a caller-chosen stream schedule.
std::vector<double> null_statistics(DetectorId id, const ComplexMatrix& cov,
                                    BlockGeometry geometry, std::size_t m,
                                    std::size_t trials, std::uint64_t seed,
                                    std::uint64_t stream_base, unsigned workers);
}

}  // namespace covtest
