#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "covtest/errors.hpp"
#include "covtest/harness.hpp"
#include "covtest/invariance.hpp"
#include "covtest/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// exit codes: 0 ok, 2 malformed input or config, 3 precondition violation
// (detect), 4 runtime failure (simulate/calibrate/invariance)
constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitPrecondition = 3;
constexpr int kExitRuntime = 4;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw covtest::Error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

covtest::DetectorId parse_detector(const std::string& name) {
    const auto id = covtest::detector_from_string(name);
    if (!id)
        throw covtest::Error("unknown detector '" + name +
                             "' (expected lmpit-corr, glrt-corr, lmpit-sph, glrt-sph, "
                             "umpit-corr or umpit-sph)");
    return *id;
}

struct SimulateArgs {
    std::string mode;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

int cmd_simulate(const SimulateArgs& a) {
    covtest::RunConfig cfg;
    const covtest::RunMode mode = a.mode == "roc"   ? covtest::RunMode::roc
                                  : a.mode == "pm"  ? covtest::RunMode::pm
                                                    : covtest::RunMode::cdf;
    try {
        cfg = covtest::run_config_from_json(read_file(a.config_path), a.seed, a.workers);
        covtest::validate_run_config(cfg, mode);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitBadInput;
    }
    try {
        covtest::RunResult res;
        if (a.mode == "roc")
            res = covtest::run_roc(cfg);
        else if (a.mode == "pm")
            res = covtest::run_pm_vs_m(cfg, cfg.pfa);
        else
            res = covtest::run_cdf(cfg);

        fs::create_directories(a.out_dir);
        const fs::path csv_path = fs::path(a.out_dir) / (a.mode + ".csv");
        const fs::path meta_path = fs::path(a.out_dir) / (a.mode + "_meta.json");
        std::ofstream csv(csv_path);
        if (!csv) throw covtest::Error("cannot write " + csv_path.string());
        if (a.mode == "roc")
            covtest::write_roc_csv(csv, res);
        else if (a.mode == "pm")
            covtest::write_pm_csv(csv, res);
        else
            covtest::write_cdf_csv(csv, res);
        std::ofstream meta(meta_path);
        if (!meta) throw covtest::Error("cannot write " + meta_path.string());
        covtest::write_meta_json(meta, res);
        std::cerr << "wrote " << csv_path.string() << " and " << meta_path.string() << '\n';
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitRuntime;
    }
}

struct CalibrateArgs {
    std::string detector;
    std::size_t l = 0, n = 0, m = 0;
    double pfa = 0.0;
    std::string method;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned workers = 1;
    std::string out_path;
};

int cmd_calibrate(const CalibrateArgs& a) {
    covtest::ThresholdRecord rec;
    try {
        const covtest::DetectorId id = parse_detector(a.detector);
        const covtest::BlockGeometry g{a.l, a.n};
        if (!g.valid()) throw covtest::Error("L and N must be at least 1");
        if (a.method == "wilks") {
            if (a.m < 10 * g.dim())
                std::cerr << "warning: M = " << a.m << " is small for the asymptotic "
                          << "approximation (suggest M >= " << 10 * g.dim() << ")\n";
            rec = covtest::wilks_threshold(id, g, a.m, a.pfa);
        } else if (a.method == "empirical") {
            if (!a.seed_set)
                throw covtest::Error("--seed is required for empirical calibration");
            if (a.trials == 0) throw covtest::Error("--trials is required for empirical calibration");
            rec = covtest::empirical_threshold(id, g, a.m, a.pfa, a.trials, a.seed, a.workers);
        } else {
            throw covtest::Error("--method must be empirical or wilks");
        }
    } catch (const covtest::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitRuntime;
    }
    const std::string text = covtest::threshold_to_json(rec);
    if (a.out_path.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream out(a.out_path);
        if (!out) {
            std::cerr << "cannot write " << a.out_path << '\n';
            return kExitRuntime;
        }
        out << text << '\n';
    }
    return kExitOk;
}

struct DetectArgs {
    std::string input;
    std::size_t l = 0, n = 0;
    std::string detector;
    double threshold = 0.0;
    bool threshold_set = false;
    std::string threshold_file;
    bool wilks = false;
    double pfa = 0.0;
    bool pfa_set = false;
};

int cmd_detect(const DetectArgs& a) {
    covtest::DetectorId id;
    covtest::SampleSet data;
    try {
        id = parse_detector(a.detector);
        const covtest::BlockGeometry g{a.l, a.n};
        if (!g.valid()) throw covtest::Error("L and N must be at least 1");
        std::ifstream in(a.input);
        if (!in) throw covtest::Error("cannot open file: " + a.input);
        data = covtest::read_samples_csv(in, g);
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitBadInput;
    }

    const int sources = (a.threshold_set ? 1 : 0) + (a.threshold_file.empty() ? 0 : 1) +
                        (a.wilks ? 1 : 0);
    if (sources != 1) {
        std::cerr << "input error: exactly one of --threshold, --threshold-file, --wilks\n";
        return kExitBadInput;
    }

    try {
        double threshold = a.threshold;
        if (!a.threshold_file.empty()) {
            covtest::ThresholdRecord rec;
            try {
                rec = covtest::threshold_from_json(read_file(a.threshold_file));
            } catch (const std::exception& e) {
                std::cerr << "input error: " << e.what() << '\n';
                return kExitBadInput;
            }
            if (rec.id != id || !(rec.geometry == data.geometry))
                throw covtest::Error("threshold record does not match the requested "
                                     "detector and geometry");
            threshold = rec.threshold;
        } else if (a.wilks) {
            if (!a.pfa_set) throw covtest::Error("--wilks requires --pfa");
            threshold = covtest::wilks_threshold(id, data.geometry, data.m, a.pfa).threshold;
        }
        const covtest::DetectorStatistic st = covtest::evaluate(id, data);
        json rep;
        rep["detector"] = covtest::to_string(id);
        rep["statistic_raw"] = covtest::raw_value(st);
        rep["statistic_oriented"] = st.value;
        rep["threshold"] = threshold;
        rep["decision"] = st.value > threshold ? "H1" : "H0";
        rep["L"] = data.geometry.l;
        rep["N"] = data.geometry.n;
        rep["M"] = data.m;
        std::cout << rep.dump(2) << '\n';
        return kExitOk;
    } catch (const covtest::Error& e) {
        std::cerr << "precondition violation: " << e.what() << '\n';
        return kExitPrecondition;
    }
}

struct InvarianceArgs {
    std::string detector;
    std::size_t l = 0, n = 0, m = 0;
    std::size_t trials = 20;
    std::uint64_t seed = 0;
    double rel_tol = 1e-8;
};

int cmd_invariance(const InvarianceArgs& a) {
    try {
        const covtest::DetectorId id = parse_detector(a.detector);
        const covtest::BlockGeometry g{a.l, a.n};
        if (!g.valid()) throw covtest::Error("L and N must be at least 1");
        if (a.m < covtest::min_samples(id, g))
            throw covtest::Error(std::string(covtest::to_string(id)) + " requires M >= " +
                                 std::to_string(covtest::min_samples(id, g)));
        const covtest::SampleSet data = covtest::sample_gaussian(
            covtest::ComplexMatrix::identity(g.dim()), g, a.m, a.seed, /*stream=*/a.trials);
        const covtest::InvarianceReport rep =
            covtest::check_invariance(id, data, covtest::group_for(id), a.trials, a.seed, a.rel_tol);
        json j;
        j["detector"] = covtest::to_string(rep.detector);
        j["group"] = covtest::to_string(rep.group);
        j["trials"] = rep.trials;
        j["max_rel_dev"] = rep.max_rel_dev;
        j["pass"] = rep.pass;
        std::cout << j.dump(2) << '\n';
        return kExitOk;
    } catch (const covtest::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"invariant tests for the covariance structure of complex Gaussian vectors"};
    app.set_version_flag("--version", covtest::kVersion);
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo experiment from a config");
    simulate->add_option("mode", sim.mode, "roc, pm or cdf")
        ->required()
        ->check(CLI::IsMember({"roc", "pm", "cdf"}));
    simulate->add_option("--config", sim.config_path, "JSON run configuration")->required();
    simulate->add_option("--out", sim.out_dir, "output directory")->required();
    simulate->add_option("--seed", sim.seed, "base seed for all randomness")->required();
    simulate->add_option("--workers", sim.workers, "worker threads (never changes results)");

    CalibrateArgs cal;
    auto* calibrate = app.add_subcommand("calibrate", "compute a detection threshold");
    calibrate->add_option("--detector", cal.detector)->required();
    calibrate->add_option("--L", cal.l)->required();
    calibrate->add_option("--N", cal.n)->required();
    calibrate->add_option("--M", cal.m)->required();
    calibrate->add_option("--pfa", cal.pfa)->required();
    calibrate->add_option("--method", cal.method, "empirical or wilks")->required();
    calibrate->add_option("--trials", cal.trials);
    auto* cal_seed = calibrate->add_option("--seed", cal.seed);
    calibrate->add_option("--workers", cal.workers);
    calibrate->add_option("--out", cal.out_path, "write the record here instead of stdout");

    DetectArgs det;
    auto* detect = app.add_subcommand("detect", "apply a detector to a sample CSV");
    detect->add_option("--input", det.input)->required();
    detect->add_option("--L", det.l)->required();
    detect->add_option("--N", det.n)->required();
    detect->add_option("--detector", det.detector)->required();
    auto* det_thr = detect->add_option("--threshold", det.threshold);
    detect->add_option("--threshold-file", det.threshold_file);
    detect->add_flag("--wilks", det.wilks);
    auto* det_pfa = detect->add_option("--pfa", det.pfa);

    InvarianceArgs inv;
    auto* invariance = app.add_subcommand("invariance", "invariance check on generated data");
    invariance->add_option("--detector", inv.detector)->required();
    invariance->add_option("--L", inv.l)->required();
    invariance->add_option("--N", inv.n)->required();
    invariance->add_option("--M", inv.m)->required();
    invariance->add_option("--trials", inv.trials);
    invariance->add_option("--seed", inv.seed)->required();
    invariance->add_option("--rel-tol", inv.rel_tol);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << '\n';
        return kExitBadInput;
    }

    cal.seed_set = cal_seed->count() > 0;
    det.threshold_set = det_thr->count() > 0;
    det.pfa_set = det_pfa->count() > 0;

    if (simulate->parsed()) return cmd_simulate(sim);
    if (calibrate->parsed()) return cmd_calibrate(cal);
    if (detect->parsed()) return cmd_detect(det);
    if (invariance->parsed()) return cmd_invariance(inv);
    return kExitBadInput;
}
