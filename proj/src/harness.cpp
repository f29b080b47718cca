#include "covtest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <ostream>

#include <nlohmann/json.hpp>

#include "covtest/errors.hpp"
#include "covtest/parallel.hpp"
#include "covtest/rng.hpp"
#include "covtest/sampling.hpp"
#include "covtest/version.hpp"

namespace covtest {

using nlohmann::json;

namespace {

constexpr unsigned kMaxAttempts = 4;

// Stream layout: attempt in bits 60..57 (redraws land on reserved streams),
// leg tag in bits 56..41, trial index in bits 40..0. ROC legs use tag 0 so
// trial t draws H0 from stream 2t and H1 from stream 2t+1.
std::uint64_t make_stream(std::uint64_t tag, std::uint64_t trial, unsigned attempt) {
    return (static_cast<std::uint64_t>(attempt) << 57) | (tag << 41) | trial;
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void validate_config_impl(const RunConfig& c, RunMode mode) {
    if (!c.scenario.geometry.valid()) throw Error("run config: invalid scenario geometry");
    if (c.detectors.empty()) throw Error("run config: no detectors requested");
    if (c.m_values.empty()) throw Error("run config: no m values requested");
    if (c.trials_per_hypothesis < 2) throw Error("run config: trials must be at least 2");
    for (DetectorId id : c.detectors) {
        if (is_umpit(id) && (c.scenario.geometry.l != 2 || c.scenario.geometry.n != 1))
            throw WrongGeometryError(std::string(to_string(id)) + " requires L = 2, N = 1");
        if (mode == RunMode::cdf && is_umpit(id))
            throw UnsupportedDetectorError("cdf runs have no Wilks scale for the scalar UMPITs");
        for (std::size_t m : c.m_values) {
            const std::size_t need = min_samples(id, c.scenario.geometry);
            if (m < need)
                throw InsufficientSamplesError(std::string(to_string(id)) + " requires M >= " +
                                               std::to_string(need) + ", config has M = " +
                                               std::to_string(m));
        }
    }
}

struct TrialContext {
    const GaussianSampler* sampler;
    std::size_t m;
    std::uint64_t seed;
    std::uint64_t tag;
    std::atomic<std::size_t>* redraws;
};

// One trial leg with the redraw policy: a numerically singular draw is
// recorded and redone on a reserved attempt stream.
std::vector<DetectorStatistic> eval_trial(const TrialContext& ctx,
                                          std::span<const DetectorId> ids,
                                          std::uint64_t trial) {
    for (unsigned attempt = 0;; ++attempt) {
        try {
            const SampleSet data =
                ctx.sampler->draw(ctx.m, ctx.seed, make_stream(ctx.tag, trial, attempt));
            return evaluate_all(ids, data);
        } catch (const NotPositiveDefiniteError&) {
            ctx.redraws->fetch_add(1, std::memory_order_relaxed);
            if (attempt + 1 >= kMaxAttempts) throw;
        }
    }
}

void check_redraw_budget(std::size_t redraws, std::size_t total_draws) {
    if (redraws * 1000 > total_draws) {
        throw Error("monte carlo run aborted: " + std::to_string(redraws) +
                    " redraws out of " + std::to_string(total_draws) +
                    " draws (singular sample covariances above the 0.1% budget)");
    }
}

RunResult init_result(const RunConfig& c, RunMode mode) {
    RunResult r;
    r.mode = mode;
    r.config_json = run_config_to_json(c);
    r.config_hash = fnv1a64(r.config_json);
    r.seed = c.seed;
    r.version = kVersion;
    return r;
}

}  // namespace

void validate_run_config(const RunConfig& config, RunMode mode) {
    validate_config_impl(config, mode);
    if (mode == RunMode::pm) {
        if (!(config.pfa > 0.0) || !(config.pfa < 1.0))
            throw InvalidProbabilityError("run config: pfa must lie in (0, 1)");
        if (static_cast<double>(config.trials_per_hypothesis) < 100.0 / config.pfa)
            throw InsufficientTrialsError("run config: threshold leg needs trials >= 100/pfa");
    }
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char b : text) {
        h ^= b;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::vector<RocPoint> empirical_roc(std::vector<double> h0, std::vector<double> h1) {
    std::sort(h0.begin(), h0.end(), std::greater<>());
    std::sort(h1.begin(), h1.end(), std::greater<>());
    std::vector<double> pooled;
    pooled.reserve(h0.size() + h1.size());
    pooled.insert(pooled.end(), h0.begin(), h0.end());
    pooled.insert(pooled.end(), h1.begin(), h1.end());
    std::sort(pooled.begin(), pooled.end(), std::greater<>());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    std::vector<RocPoint> pts;
    pts.reserve(pooled.size() + 1);
    pts.push_back({0.0, 0.0});
    const double n0 = static_cast<double>(h0.size());
    const double n1 = static_cast<double>(h1.size());
    std::size_t i0 = 0, i1 = 0;
    for (double v : pooled) {
        while (i0 < h0.size() && h0[i0] >= v) ++i0;
        while (i1 < h1.size() && h1[i1] >= v) ++i1;
        pts.push_back({static_cast<double>(i0) / n0, static_cast<double>(i1) / n1});
    }
    return pts;
}

double roc_auc(const std::vector<RocPoint>& roc) {
    double auc = 0.0;
    for (std::size_t k = 1; k < roc.size(); ++k) {
        auc += (roc[k].pfa - roc[k - 1].pfa) * 0.5 * (roc[k].pd + roc[k - 1].pd);
    }
    return auc;
}

double auc_from_stats(const std::vector<double>& h0, const std::vector<double>& h1) {
    // Mann-Whitney with midranks for ties
    std::vector<std::pair<double, int>> pool;
    pool.reserve(h0.size() + h1.size());
    for (double v : h0) pool.emplace_back(v, 0);
    for (double v : h1) pool.emplace_back(v, 1);
    std::sort(pool.begin(), pool.end());
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < pool.size()) {
        std::size_t j = i;
        while (j < pool.size() && pool[j].first == pool[i].first) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based average
        for (std::size_t k = i; k < j; ++k)
            if (pool[k].second == 1) rank_sum += midrank;
        i = j;
    }
    const double n0 = static_cast<double>(h0.size());
    const double n1 = static_cast<double>(h1.size());
    return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n0 * n1);
}

PairedAucGap paired_auc_gap(const std::vector<double>& h0_a, const std::vector<double>& h1_a,
                            const std::vector<double>& h0_b, const std::vector<double>& h1_b,
                            std::size_t replicates, std::uint64_t seed) {
    if (h0_a.size() != h0_b.size() || h1_a.size() != h1_b.size())
        throw Error("paired_auc_gap: the detectors saw different trial counts");
    PairedAucGap out;
    out.gap = auc_from_stats(h0_a, h1_a) - auc_from_stats(h0_b, h1_b);
    const std::size_t n0 = h0_a.size(), n1 = h1_a.size();
    std::vector<double> gaps(replicates);
    std::vector<double> r0a(n0), r1a(n1), r0b(n0), r1b(n1);
    for (std::size_t rep = 0; rep < replicates; ++rep) {
        Philox rng(seed, rep);
        for (std::size_t k = 0; k < n0; ++k) {
            const std::size_t i = rng.next_below(n0);
            r0a[k] = h0_a[i];
            r0b[k] = h0_b[i];
        }
        for (std::size_t k = 0; k < n1; ++k) {
            const std::size_t i = rng.next_below(n1);
            r1a[k] = h1_a[i];
            r1b[k] = h1_b[i];
        }
        gaps[rep] = auc_from_stats(r0a, r1a) - auc_from_stats(r0b, r1b);
    }
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(replicates);
    double var = 0.0;
    for (double g : gaps) var += (g - mean) * (g - mean);
    var /= static_cast<double>(replicates - 1);
    out.se = std::sqrt(var);
    return out;
}

double ks_distance_chi2(const std::vector<double>& sorted_values, unsigned dof) {
    const double n = static_cast<double>(sorted_values.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < sorted_values.size(); ++i) {
        const double f = chi2_cdf(sorted_values[i], dof);
        ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
        ks = std::max(ks, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return ks;
}

RunResult run_roc(const RunConfig& config) {
    validate_config_impl(config, RunMode::roc);
    RunResult res = init_result(config, RunMode::roc);
    const GaussianSampler s0(config.scenario.r_h0, config.scenario.geometry);
    const GaussianSampler s1(config.scenario.r_h1, config.scenario.geometry);
    const std::size_t trials = config.trials_per_hypothesis;
    const std::size_t nd = config.detectors.size();
    std::atomic<std::size_t> redraws{0};

    for (std::size_t m : config.m_values) {
        std::vector<std::vector<double>> h0(nd, std::vector<double>(trials));
        std::vector<std::vector<double>> h1(nd, std::vector<double>(trials));
        const TrialContext c0{&s0, m, config.seed, 0, &redraws};
        const TrialContext c1{&s1, m, config.seed, 0, &redraws};
        parallel_for(trials, config.workers, [&](std::size_t t) {
            const auto v0 = eval_trial(c0, config.detectors, 2 * t);
            const auto v1 = eval_trial(c1, config.detectors, 2 * t + 1);
            for (std::size_t d = 0; d < nd; ++d) {
                h0[d][t] = v0[d].value;
                h1[d][t] = v1[d].value;
            }
        });
        for (std::size_t d = 0; d < nd; ++d) {
            DetectorRun run;
            run.id = config.detectors[d];
            run.m = m;
            run.h0_by_trial = std::move(h0[d]);
            run.h1_by_trial = std::move(h1[d]);
            run.h0_sorted = run.h0_by_trial;
            run.h1_sorted = run.h1_by_trial;
            std::sort(run.h0_sorted.begin(), run.h0_sorted.end());
            std::sort(run.h1_sorted.begin(), run.h1_sorted.end());
            run.roc = empirical_roc(run.h0_by_trial, run.h1_by_trial);
            run.auc = roc_auc(run.roc);
            run.threshold = interpolated_quantile(run.h0_sorted, 1.0 - config.pfa);
            run.pm = static_cast<double>(std::count_if(
                         run.h1_by_trial.begin(), run.h1_by_trial.end(),
                         [&](double v) { return v <= run.threshold; })) /
                     static_cast<double>(trials);
            res.runs.push_back(std::move(run));
        }
    }
    res.redraws = redraws.load();
    check_redraw_budget(res.redraws, 2 * trials * config.m_values.size());
    return res;
}

RunResult run_pm_vs_m(const RunConfig& input, double pfa) {
    RunConfig config = input;
    config.pfa = pfa;  // the recorded config carries the pfa actually used
    validate_config_impl(config, RunMode::pm);
    if (!(pfa > 0.0) || !(pfa < 1.0))
        throw InvalidProbabilityError("run_pm_vs_m: pfa must lie in (0, 1)");
    const std::size_t trials = config.trials_per_hypothesis;
    if (static_cast<double>(trials) < 100.0 / pfa)
        throw InsufficientTrialsError("run_pm_vs_m: threshold leg needs trials >= 100/pfa");

    RunResult res = init_result(config, RunMode::pm);
    const GaussianSampler s0(config.scenario.r_h0, config.scenario.geometry);
    const GaussianSampler s1(config.scenario.r_h1, config.scenario.geometry);
    const std::size_t nd = config.detectors.size();
    std::atomic<std::size_t> redraws{0};

    for (std::size_t im = 0; im < config.m_values.size(); ++im) {
        const std::size_t m = config.m_values[im];
        std::vector<std::vector<double>> h0(nd, std::vector<double>(trials));
        std::vector<std::vector<double>> h1(nd, std::vector<double>(trials));
        const TrialContext c0{&s0, m, config.seed, 1 + 2 * im, &redraws};
        const TrialContext c1{&s1, m, config.seed, 2 + 2 * im, &redraws};
        parallel_for(trials, config.workers, [&](std::size_t t) {
            const auto v0 = eval_trial(c0, config.detectors, t);
            const auto v1 = eval_trial(c1, config.detectors, t);
            for (std::size_t d = 0; d < nd; ++d) {
                h0[d][t] = v0[d].value;
                h1[d][t] = v1[d].value;
            }
        });
        for (std::size_t d = 0; d < nd; ++d) {
            DetectorRun run;
            run.id = config.detectors[d];
            run.m = m;
            run.h0_by_trial = std::move(h0[d]);
            run.h1_by_trial = std::move(h1[d]);
            run.h0_sorted = run.h0_by_trial;
            run.h1_sorted = run.h1_by_trial;
            std::sort(run.h0_sorted.begin(), run.h0_sorted.end());
            std::sort(run.h1_sorted.begin(), run.h1_sorted.end());
            run.threshold = interpolated_quantile(run.h0_sorted, 1.0 - pfa);
            run.pm = static_cast<double>(std::count_if(
                         run.h1_by_trial.begin(), run.h1_by_trial.end(),
                         [&](double v) { return v <= run.threshold; })) /
                     static_cast<double>(trials);
            res.runs.push_back(std::move(run));
        }
    }
    res.redraws = redraws.load();
    check_redraw_budget(res.redraws, 2 * trials * config.m_values.size());
    return res;
}

RunResult run_cdf(const RunConfig& config) {
    validate_config_impl(config, RunMode::cdf);
    RunResult res = init_result(config, RunMode::cdf);
    const GaussianSampler s0(config.scenario.r_h0, config.scenario.geometry);
    const std::size_t trials = config.trials_per_hypothesis;
    const std::size_t nd = config.detectors.size();
    const double ln = static_cast<double>(config.scenario.geometry.dim());
    std::atomic<std::size_t> redraws{0};

    for (std::size_t im = 0; im < config.m_values.size(); ++im) {
        const std::size_t m = config.m_values[im];
        std::vector<std::vector<double>> h0(nd, std::vector<double>(trials));
        const TrialContext c0{&s0, m, config.seed, 1 + im, &redraws};
        parallel_for(trials, config.workers, [&](std::size_t t) {
            const auto v0 = eval_trial(c0, config.detectors, t);
            for (std::size_t d = 0; d < nd; ++d) h0[d][t] = v0[d].value;
        });
        for (std::size_t d = 0; d < nd; ++d) {
            DetectorRun run;
            run.id = config.detectors[d];
            run.m = m;
            run.h0_by_trial = std::move(h0[d]);
            run.h0_sorted = run.h0_by_trial;
            std::sort(run.h0_sorted.begin(), run.h0_sorted.end());
            run.wilks_dof = wilks_dof(run.id, config.scenario.geometry);
            const double dm = static_cast<double>(m);
            run.cdf_values.reserve(trials);
            for (double v : run.h0_sorted) {
                // Wilks scale: M(T - LN) for the LMPITs, 2MT for the oriented
                // GLRTs (both converge to the same chi-squared null).
                run.cdf_values.push_back(is_glrt(run.id) ? 2.0 * dm * v : dm * (v - ln));
            }
            run.cdf_empirical.reserve(trials);
            run.cdf_wilks.reserve(trials);
            for (std::size_t i = 0; i < trials; ++i) {
                run.cdf_empirical.push_back(static_cast<double>(i + 1) /
                                            static_cast<double>(trials));
                run.cdf_wilks.push_back(chi2_cdf(run.cdf_values[i], run.wilks_dof));
            }
            res.runs.push_back(std::move(run));
        }
    }
    res.redraws = redraws.load();
    check_redraw_budget(res.redraws, trials * config.m_values.size());
    return res;
}

void write_roc_csv(std::ostream& os, const RunResult& r) {
    os << "detector,m,pfa,pd\n";
    for (const DetectorRun& run : r.runs) {
        for (const RocPoint& p : run.roc) {
            os << to_string(run.id) << ',' << run.m << ',' << fmt(p.pfa) << ',' << fmt(p.pd)
               << '\n';
        }
    }
}

void write_pm_csv(std::ostream& os, const RunResult& r) {
    const double pfa = json::parse(r.config_json).at("pfa").get<double>();
    os << "detector,m,pfa,pm,threshold\n";
    for (const DetectorRun& run : r.runs) {
        os << to_string(run.id) << ',' << run.m << ',' << fmt(pfa) << ',' << fmt(run.pm)
           << ',' << fmt(run.threshold) << '\n';
    }
}

void write_cdf_csv(std::ostream& os, const RunResult& r) {
    os << "detector,m,value,empirical_cdf,wilks_cdf\n";
    for (const DetectorRun& run : r.runs) {
        for (std::size_t i = 0; i < run.cdf_values.size(); ++i) {
            os << to_string(run.id) << ',' << run.m << ',' << fmt(run.cdf_values[i]) << ','
               << fmt(run.cdf_empirical[i]) << ',' << fmt(run.cdf_wilks[i]) << '\n';
        }
    }
}

void write_meta_json(std::ostream& os, const RunResult& r) {
    json j;
    j["config"] = json::parse(r.config_json);
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(r.config_hash));
    j["config_hash"] = hash;
    j["seed"] = r.seed;
    j["version"] = r.version;
    j["redraws"] = r.redraws;
    j["mode"] = r.mode == RunMode::roc ? "roc" : (r.mode == RunMode::pm ? "pm" : "cdf");
    os << j.dump(2) << '\n';
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["scenario"] = json::parse(c.scenario.descriptor);
    std::vector<std::string> names;
    names.reserve(c.detectors.size());
    for (DetectorId id : c.detectors) names.emplace_back(to_string(id));
    j["detectors"] = names;
    j["m_values"] = c.m_values;
    j["trials"] = c.trials_per_hypothesis;
    j["pfa"] = c.pfa;
    j["seed"] = c.seed;
    return j.dump();
}

RunConfig run_config_from_json(const std::string& text, std::uint64_t seed, unsigned workers) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("config parse error: ") + e.what());
    }
    for (const char* field : {"scenario", "detectors", "m_values", "trials"}) {
        if (!j.contains(field))
            throw Error(std::string("missing required field `") + field + "`");
    }
    const json& sc = j["scenario"];
    for (const char* field : {"model", "kind", "L", "N"}) {
        if (!sc.contains(field))
            throw Error(std::string("missing required field `") + field + "` in scenario");
    }
    RunConfig c;
    try {
        c.scenario = scenario_from_json(sc.dump());
        for (const auto& name : j["detectors"]) {
            const auto id = detector_from_string(name.get<std::string>());
            if (!id) throw Error("unknown detector name: " + name.get<std::string>());
            c.detectors.push_back(*id);
        }
        c.m_values = j["m_values"].get<std::vector<std::size_t>>();
        c.trials_per_hypothesis = j["trials"].get<std::size_t>();
        c.pfa = j.value("pfa", 1e-2);
    } catch (const json::exception& e) {
        throw Error(std::string("config parse error: ") + e.what());
    }
    c.seed = seed;
    c.workers = workers;
    return c;
}

}  // namespace covtest
