#include "covtest/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "covtest/errors.hpp"
#include "covtest/parallel.hpp"

namespace covtest {

using nlohmann::json;

namespace {

// Regularized lower incomplete gamma P(a, y) by power series (y < a + 1).
double gamma_p_series(double a, double y) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 10000; ++n) {
        ap += 1.0;
        del *= y / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-y + a * std::log(y) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, y) by Lentz continued fraction.
double gamma_q_cf(double a, double y) {
    const double tiny = 1e-300;
    double b = y + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-y + a * std::log(y) - std::lgamma(a));
}

}  // namespace

double chi2_cdf(double x, unsigned dof) {
    if (dof < 1) throw InvalidDofError("chi2_cdf: dof must be at least 1");
    if (!(x > 0.0)) return 0.0;
    const double a = 0.5 * dof;
    const double y = 0.5 * x;
    if (y < a + 1.0) return gamma_p_series(a, y);
    return 1.0 - gamma_q_cf(a, y);
}

double chi2_quantile(double p, unsigned dof) {
    if (dof < 1) throw InvalidDofError("chi2_quantile: dof must be at least 1");
    if (!(p > 0.0) || !(p < 1.0))
        throw InvalidProbabilityError("chi2_quantile: p must lie in (0, 1)");
    double lo = 0.0;
    double hi = dof + 10.0 * std::sqrt(2.0 * dof) + 10.0;
    while (chi2_cdf(hi, dof) < p) {
        hi *= 2.0;
        if (hi > 1e300) throw NoConvergenceError("chi2_quantile: bracket expansion failed");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi2_cdf(mid, dof) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

const char* to_string(ThresholdMethod m) {
    return m == ThresholdMethod::empirical ? "empirical" : "wilks";
}

unsigned wilks_dof(DetectorId id, BlockGeometry geometry) {
    if (is_umpit(id))
        throw UnsupportedDetectorError("wilks_dof: no chi-squared scale for the scalar UMPITs");
    const auto l = static_cast<unsigned>(geometry.l);
    const auto n = static_cast<unsigned>(geometry.n);
    return correlation_family(id) ? (l * l - l) * n * n : (l * l - 1) * n * n;
}

ThresholdRecord wilks_threshold(DetectorId id, BlockGeometry geometry, std::size_t m,
                                double pfa) {
    if (id != DetectorId::lmpit_corr && id != DetectorId::lmpit_sph)
        throw UnsupportedDetectorError(
            "wilks_threshold: only the LMPIT statistics have a Wilks scale; "
            "GLRT thresholds are empirical-only");
    if (!(pfa > 0.0) || !(pfa < 1.0))
        throw InvalidProbabilityError("wilks_threshold: pfa must lie in (0, 1)");
    if (m < 1) throw InsufficientSamplesError("wilks_threshold: m must be at least 1");
    const unsigned dof = wilks_dof(id, geometry);
    ThresholdRecord rec;
    rec.id = id;
    rec.geometry = geometry;
    rec.m = m;
    rec.pfa = pfa;
    rec.method = ThresholdMethod::wilks;
    rec.threshold = static_cast<double>(geometry.dim()) +
                    chi2_quantile(1.0 - pfa, dof) / static_cast<double>(m);
    return rec;
}

double interpolated_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw Error("interpolated_quantile: empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

namespace detail {

std::vector<double> null_statistics(DetectorId id, const ComplexMatrix& cov,
                                    BlockGeometry geometry, std::size_t m,
                                    std::size_t trials, std::uint64_t seed,
                                    std::uint64_t stream_base, unsigned workers) {
    const GaussianSampler sampler(cov, geometry);
    std::vector<double> stats(trials);
    parallel_for(trials, workers, [&](std::size_t t) {
        const SampleSet data = sampler.draw(m, seed, stream_base + t);
        stats[t] = evaluate(id, data).value;
    });
    return stats;
}

}  // namespace detail

ThresholdRecord empirical_threshold(DetectorId id, BlockGeometry geometry, std::size_t m,
                                    double pfa, std::size_t trials, std::uint64_t seed,
                                    unsigned workers) {
    if (!(pfa > 0.0) || !(pfa < 1.0))
        throw InvalidProbabilityError("empirical_threshold: pfa must lie in (0, 1)");
    if (static_cast<double>(trials) < 100.0 / pfa)
        throw InsufficientTrialsError("empirical_threshold: needs trials >= 100/pfa = " +
                                      std::to_string(100.0 / pfa));
    if (m < min_samples(id, geometry))
        throw InsufficientSamplesError(std::string("empirical_threshold: ") + to_string(id) +
                                       " requires M >= " +
                                       std::to_string(min_samples(id, geometry)));
    std::vector<double> stats = detail::null_statistics(
        id, ComplexMatrix::identity(geometry.dim()), geometry, m, trials, seed, 0, workers);
    std::sort(stats.begin(), stats.end());
    ThresholdRecord rec;
    rec.id = id;
    rec.geometry = geometry;
    rec.m = m;
    rec.pfa = pfa;
    rec.method = ThresholdMethod::empirical;
    rec.threshold = interpolated_quantile(stats, 1.0 - pfa);
    rec.trials = trials;
    rec.seed = seed;
    return rec;
}

std::string threshold_to_json(const ThresholdRecord& r) {
    json j;
    j["detector"] = to_string(r.id);
    j["L"] = r.geometry.l;
    j["N"] = r.geometry.n;
    j["M"] = r.m;
    j["pfa"] = r.pfa;
    j["method"] = to_string(r.method);
    j["threshold"] = r.threshold;
    if (r.method == ThresholdMethod::empirical) {
        j["trials"] = r.trials;
        j["seed"] = r.seed;
    }
    return j.dump(2);
}

ThresholdRecord threshold_from_json(const std::string& text) {
    const json j = json::parse(text);
    ThresholdRecord r;
    const auto id = detector_from_string(j.at("detector").get<std::string>());
    if (!id) throw Error("threshold_from_json: unknown detector name");
    r.id = *id;
    r.geometry = {j.at("L").get<std::size_t>(), j.at("N").get<std::size_t>()};
    r.m = j.at("M").get<std::size_t>();
    r.pfa = j.at("pfa").get<double>();
    const std::string method = j.at("method").get<std::string>();
    if (method == "empirical")
        r.method = ThresholdMethod::empirical;
    else if (method == "wilks")
        r.method = ThresholdMethod::wilks;
    else
        throw Error("threshold_from_json: unknown method " + method);
    r.threshold = j.at("threshold").get<double>();
    r.trials = j.value("trials", std::size_t{0});
    r.seed = j.value("seed", std::uint64_t{0});
    return r;
}

}  // namespace covtest
