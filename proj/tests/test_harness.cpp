#include <doctest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "covtest/errors.hpp"
#include "covtest/harness.hpp"

using covtest::DetectorId;
using covtest::RunConfig;
using covtest::RunResult;

namespace {

RunConfig small_config(double omega_spread) {
    RunConfig c;
    const std::vector<double> omega = {1.0 - omega_spread, 1.0 + omega_spread};
    c.scenario = covtest::scenario_circulant({2, 1}, omega);
    c.detectors = {DetectorId::lmpit_corr, DetectorId::glrt_corr};
    c.m_values = {8};
    c.trials_per_hypothesis = 500;
    c.seed = 404;
    c.pfa = 0.1;
    return c;
}

}  // namespace

TEST_CASE("roc of indistinguishable hypotheses is the diagonal") {
    const RunResult r = covtest::run_roc(small_config(0.0));
    for (const auto& run : r.runs) {
        // AUC se ~ sqrt((n0+n1+1)/(12 n0 n1)) ~ 0.0183 at 500/500
        CHECK(std::abs(run.auc - 0.5) < 3.0 * 0.0183);
    }
}

TEST_CASE("roc under strong separation saturates") {
    RunConfig c;
    const std::vector<double> omega = {1e-3, 1e-1, 1e1, 1e3};
    c.scenario = covtest::scenario_circulant({4, 1}, omega);
    c.detectors = {DetectorId::lmpit_corr, DetectorId::glrt_corr};
    c.m_values = {16};
    c.trials_per_hypothesis = 200;
    c.seed = 1;
    const RunResult r = covtest::run_roc(c);
    for (const auto& run : r.runs) CHECK(run.auc > 0.99);
}

TEST_CASE("roc points are monotone with correct endpoints") {
    const RunResult r = covtest::run_roc(small_config(0.4));
    for (const auto& run : r.runs) {
        REQUIRE(run.roc.size() > 2);
        CHECK(run.roc.front().pfa == 0.0);
        CHECK(run.roc.front().pd == 0.0);
        CHECK(run.roc.back().pfa == 1.0);
        CHECK(run.roc.back().pd == 1.0);
        for (std::size_t i = 1; i < run.roc.size(); ++i) {
            CHECK(run.roc[i].pfa >= run.roc[i - 1].pfa);
            CHECK(run.roc[i].pd >= run.roc[i - 1].pd);
        }
        CHECK(run.auc >= 0.0);
        CHECK(run.auc <= 1.0);
    }
}

TEST_CASE("run results are identical across worker counts") {
    RunConfig c = small_config(0.3);
    c.trials_per_hypothesis = 120;
    c.workers = 1;
    const RunResult r1 = covtest::run_roc(c);
    c.workers = 3;
    const RunResult r3 = covtest::run_roc(c);
    REQUIRE(r1.runs.size() == r3.runs.size());
    for (std::size_t i = 0; i < r1.runs.size(); ++i) {
        CHECK(r1.runs[i].h0_by_trial == r3.runs[i].h0_by_trial);
        CHECK(r1.runs[i].h1_by_trial == r3.runs[i].h1_by_trial);
        CHECK(r1.runs[i].auc == r3.runs[i].auc);
    }
    CHECK(r1.config_json == r3.config_json);
    CHECK(r1.config_hash == r3.config_hash);
    std::ostringstream csv1, csv3;
    covtest::write_roc_csv(csv1, r1);
    covtest::write_roc_csv(csv3, r3);
    CHECK(csv1.str() == csv3.str());
}

TEST_CASE("pm run: degenerate scenario misses at rate 1 - pfa") {
    RunConfig c = small_config(0.0);
    c.trials_per_hypothesis = 1000;
    c.detectors = {DetectorId::lmpit_corr};
    const RunResult r = covtest::run_pm_vs_m(c, 0.2);
    REQUIRE(r.runs.size() == 1);
    // both legs have the same distribution: pm ~ 1 - pfa within MC error
    const double se = std::sqrt(2.0 * 0.2 * 0.8 / 1000.0);
    CHECK(std::abs(r.runs[0].pm - 0.8) < 3.0 * se);
}

TEST_CASE("pm run input domain") {
    RunConfig c = small_config(0.3);
    CHECK_THROWS_AS(covtest::run_pm_vs_m(c, 1.0), covtest::InvalidProbabilityError);
    CHECK_THROWS_AS(covtest::run_pm_vs_m(c, 1e-4), covtest::InsufficientTrialsError);
}

TEST_CASE("cdf run emits monotone curves with the right endpoints") {
    RunConfig c = small_config(0.0);
    c.detectors = {DetectorId::lmpit_corr, DetectorId::glrt_corr};
    c.trials_per_hypothesis = 300;
    c.m_values = {32};
    const RunResult r = covtest::run_cdf(c);
    for (const auto& run : r.runs) {
        REQUIRE(run.cdf_values.size() == 300);
        CHECK(run.cdf_empirical.front() == doctest::Approx(1.0 / 300.0));
        CHECK(run.cdf_empirical.back() == doctest::Approx(1.0));
        CHECK(std::is_sorted(run.cdf_values.begin(), run.cdf_values.end()));
        CHECK(std::is_sorted(run.cdf_wilks.begin(), run.cdf_wilks.end()));
        CHECK(run.wilks_dof == 2);  // (L^2-L)N^2 at L=2, N=1
        // transform agrees with the sorted raw statistics
        const double m = 32.0;
        if (run.id == DetectorId::lmpit_corr) {
            CHECK(run.cdf_values.front() ==
                  doctest::Approx(m * (run.h0_sorted.front() - 2.0)));
        } else {
            CHECK(run.cdf_values.front() == doctest::Approx(2.0 * m * run.h0_sorted.front()));
        }
    }
}

TEST_CASE("umpit detectors are rejected in cdf mode") {
    RunConfig c = small_config(0.0);
    c.detectors = {DetectorId::umpit_corr};
    CHECK_THROWS_AS(covtest::run_cdf(c), covtest::UnsupportedDetectorError);
}

TEST_CASE("config validation catches sample-count violations") {
    RunConfig c = small_config(0.3);
    c.detectors = {DetectorId::glrt_corr};
    c.m_values = {1};  // below L*N = 2
    CHECK_THROWS_AS(covtest::run_roc(c), covtest::InsufficientSamplesError);
}

TEST_CASE("csv headers match the interface") {
    RunConfig c = small_config(0.2);
    c.trials_per_hypothesis = 250;
    std::ostringstream roc, pm, cdf;
    covtest::write_roc_csv(roc, covtest::run_roc(c));
    CHECK(roc.str().rfind("detector,m,pfa,pd\n", 0) == 0);
    covtest::write_pm_csv(pm, covtest::run_pm_vs_m(c, 0.5));
    CHECK(pm.str().rfind("detector,m,pfa,pm,threshold\n", 0) == 0);
    covtest::write_cdf_csv(cdf, covtest::run_cdf(c));
    CHECK(cdf.str().rfind("detector,m,value,empirical_cdf,wilks_cdf\n", 0) == 0);
}

TEST_CASE("run config json round-trip and hash stability") {
    RunConfig c = small_config(0.2);
    const std::string j = covtest::run_config_to_json(c);
    const RunConfig back = covtest::run_config_from_json(j, c.seed, 2);
    CHECK(covtest::run_config_to_json(back) == j);
    CHECK(covtest::fnv1a64(j) == covtest::fnv1a64(j));
}

TEST_CASE("run config parse errors name the missing field") {
    CHECK_THROWS_WITH_AS(covtest::run_config_from_json(R"({"detectors":[]})", 1, 1),
                         doctest::Contains("scenario"), covtest::Error);
    CHECK_THROWS_WITH_AS(
        covtest::run_config_from_json(
            R"({"scenario":{"model":"circulant","kind":"correlation","N":2,"omega":[1.0]},
                "detectors":["lmpit-corr"],"m_values":[8],"trials":10})",
            1, 1),
        doctest::Contains("L"), covtest::Error);
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(covtest::fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(covtest::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("auc helpers agree") {
    const std::vector<double> h0 = {0.1, 0.4, 0.35, 0.8};
    const std::vector<double> h1 = {0.9, 0.5, 0.7, 0.2};
    const double direct = covtest::auc_from_stats(h0, h1);
    const double viaroc = covtest::roc_auc(covtest::empirical_roc(h0, h1));
    CHECK(direct == doctest::Approx(viaroc).epsilon(1e-12));
    CHECK(covtest::auc_from_stats({1.0, 2.0}, {3.0, 4.0}) == doctest::Approx(1.0));
    CHECK(covtest::auc_from_stats({3.0, 4.0}, {1.0, 2.0}) == doctest::Approx(0.0));
}

TEST_CASE("paired auc gap on identical detectors is exactly zero") {
    const std::vector<double> h0 = {0.1, 0.2, 0.3, 0.4, 0.5, 0.15};
    const std::vector<double> h1 = {0.6, 0.3, 0.8, 0.9, 0.2, 0.7};
    const auto gap = covtest::paired_auc_gap(h0, h1, h0, h1, 100, 5);
    CHECK(gap.gap == 0.0);
    CHECK(gap.se == 0.0);
}

TEST_CASE("ks distance helper flags the wrong dof") {
    // build near-perfect chi2(6) samples from the quantile function
    std::vector<double> samples;
    for (int i = 1; i <= 400; ++i)
        samples.push_back(covtest::chi2_quantile((i - 0.5) / 400.0, 6));
    CHECK(covtest::ks_distance_chi2(samples, 6) < 0.01);
    CHECK(covtest::ks_distance_chi2(samples, 12) > 0.2);
}
