#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "covtest/calibration.hpp"
#include "covtest/model.hpp"

namespace covtest {

struct RunConfig {
    Scenario scenario;
    std::vector<DetectorId> detectors;
    std::vector<std::size_t> m_values;
    std::size_t trials_per_hypothesis = 0;
    std::uint64_t seed = 0;
    double pfa = 1e-2;       // used by pm runs and the roc pm-at-pfa summary
    unsigned workers = 1;    // never affects the emitted numbers
};

struct RocPoint {
    double pfa = 0.0;
    double pd = 0.0;
};

// Everything recorded for one (detector, m) cell. Per-trial statistics are
// keyed by trial index so aggregation is independent of worker scheduling.
struct DetectorRun {
    DetectorId id;
    std::size_t m = 0;
    std::vector<double> h0_by_trial;
    std::vector<double> h1_by_trial;       // empty for cdf runs
    std::vector<double> h0_sorted;
    std::vector<double> h1_sorted;
    std::vector<RocPoint> roc;             // roc runs
    double auc = 0.0;                      // roc runs
    double threshold = 0.0;                // pm runs (and roc pm-at-pfa)
    double pm = 0.0;                       // pm runs (and roc pm-at-pfa)
    std::vector<double> cdf_values;        // cdf runs: transformed sorted statistics
    std::vector<double> cdf_empirical;     // cdf runs: i/n levels
    std::vector<double> cdf_wilks;         // cdf runs: chi-squared overlay
    unsigned wilks_dof = 0;                // cdf runs
};

enum class RunMode { roc, pm, cdf };

struct RunResult {
    RunMode mode = RunMode::roc;
    std::vector<DetectorRun> runs;
    std::string config_json;   // canonical config used (workers excluded)
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string version;
    std::size_t redraws = 0;   // trials redrawn after numeric failures
};

// Checks geometry, detector and sample-count preconditions; throws the same
// errors the run entry points would. Lets a front end separate config errors
// from runtime failures.
void validate_run_config(const RunConfig& config, RunMode mode);

// Paired ROC experiment: trial t uses stream 2t under H0 and 2t+1 under H1,
// every detector sees the same datasets. ROC by full threshold sweep over the
// pooled statistics, AUC by trapezoid.
RunResult run_roc(const RunConfig& config);

// For each m: empirical threshold at pfa from an H0 calibration leg, then the
// missed-detection probability on a fresh H1 leg.
RunResult run_pm_vs_m(const RunConfig& config, double pfa);

// H0-only run; emits the statistics on the Wilks scale (M(T - LN) for the
// LMPITs, 2MT for the oriented GLRTs) plus the chi-squared CDF on that grid.
RunResult run_cdf(const RunConfig& config);

void write_roc_csv(std::ostream& os, const RunResult& r);   // detector,m,pfa,pd
void write_pm_csv(std::ostream& os, const RunResult& r);    // detector,m,pfa,pm,threshold
void write_cdf_csv(std::ostream& os, const RunResult& r);   // detector,m,value,empirical_cdf,wilks_cdf
void write_meta_json(std::ostream& os, const RunResult& r);

std::string run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const std::string& text, std::uint64_t seed,
                               unsigned workers);

// Empirical ROC points of two labeled statistic sets (larger favors H1).
std::vector<RocPoint> empirical_roc(std::vector<double> h0, std::vector<double> h1);
double roc_auc(const std::vector<RocPoint>& roc);

// Mann-Whitney AUC of h1 vs h0.
double auc_from_stats(const std::vector<double>& h0, const std::vector<double>& h1);

struct PairedAucGap {
    double gap = 0.0;  // auc(a) - auc(b)
    double se = 0.0;   // paired bootstrap standard error of the gap
};

// Both detectors must be evaluated on the same trials, element i of each
// array belonging to trial i; the bootstrap resamples trial indices.
PairedAucGap paired_auc_gap(const std::vector<double>& h0_a, const std::vector<double>& h1_a,
                            const std::vector<double>& h0_b, const std::vector<double>& h1_b,
                            std::size_t replicates, std::uint64_t seed);

// Kolmogorov-Smirnov distance between sorted samples and the chi-squared CDF.
double ks_distance_chi2(const std::vector<double>& sorted_values, unsigned dof);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace covtest
