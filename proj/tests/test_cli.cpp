#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "covtest/calibration.hpp"
#include "covtest/sampling.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir() {
    const fs::path d = fs::temp_directory_path() / "covtest_cli_tests";
    fs::create_directories(d);
    return d;
}

CliResult run_cli(const std::string& args) {
    const char* bin = std::getenv("COVTEST_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "COVTEST_BIN must point at the covtest binary");
    const fs::path d = scratch_dir();
    const fs::path out = d / "stdout.txt";
    const fs::path err = d / "stderr.txt";
    const std::string cmd =
        std::string(bin) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int rc = std::system(cmd.c_str());
    CliResult r;
    r.code = WEXITSTATUS(rc);
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("cli: calibrate wilks emits a threshold record") {
    const CliResult r =
        run_cli("calibrate --detector lmpit-corr --L 2 --N 1 --M 100 --pfa 0.5 --method wilks");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("detector") == "lmpit-corr");
    CHECK(j.at("method") == "wilks");
    const double expect = 2.0 + covtest::chi2_quantile(0.5, 2) / 100.0;
    CHECK(j.at("threshold").get<double>() == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("cli: empirical calibration requires a seed") {
    const CliResult r = run_cli(
        "calibrate --detector lmpit-corr --L 2 --N 1 --M 50 --pfa 0.5 --method empirical "
        "--trials 300");
    CHECK(r.code == 2);
    CHECK(r.err.find("seed") != std::string::npos);
}

TEST_CASE("cli: detect flags perfect correlation") {
    const fs::path d = scratch_dir();
    const fs::path csv = d / "ident.csv";
    std::ostringstream ss;
    ss << "re_0,im_0,re_1,im_1\n";
    for (int k = 0; k < 10; ++k)
        ss << (1.0 + k) << "," << (0.5 * k) << "," << (1.0 + k) << "," << (0.5 * k) << "\n";
    write_text(csv, ss.str());
    const CliResult r = run_cli("detect --input " + csv.string() +
                                " --L 2 --N 1 --detector umpit-corr --threshold 0.9");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("statistic_oriented").get<double>() == doctest::Approx(1.0));
    CHECK(j.at("decision") == "H1");
    CHECK(j.at("M") == 10);
}

TEST_CASE("cli: malformed csv exits 2") {
    const fs::path d = scratch_dir();
    const fs::path csv = d / "bad.csv";
    write_text(csv, "re_0,im_0\n1,banana\n");
    const CliResult r =
        run_cli("detect --input " + csv.string() + " --L 1 --N 1 --detector lmpit-corr --threshold 1");
    CHECK(r.code == 2);
}

TEST_CASE("cli: insufficient samples exits 3 and names the bound") {
    const fs::path d = scratch_dir();
    const fs::path csv = d / "short.csv";
    write_text(csv, "re_0,im_0,re_1,im_1\n1,0,0,1\n");
    const CliResult r = run_cli("detect --input " + csv.string() +
                                " --L 1 --N 2 --detector lmpit-corr --threshold 1");
    CHECK(r.code == 3);
    CHECK(r.err.find("M >= 2") != std::string::npos);
}

TEST_CASE("cli: detect with a wilks threshold") {
    const fs::path d = scratch_dir();
    const fs::path csv = d / "wilks_in.csv";
    const auto data = covtest::sample_gaussian(covtest::ComplexMatrix::identity(4), {2, 2},
                                               60, 5, 0);
    std::ostringstream ss;
    covtest::write_samples_csv(ss, data);
    write_text(csv, ss.str());
    const CliResult r = run_cli("detect --input " + csv.string() +
                                " --L 2 --N 2 --detector lmpit-corr --wilks --pfa 0.05");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("threshold").get<double>() > 4.0);
}

TEST_CASE("cli: mismatched threshold record exits 3") {
    const fs::path d = scratch_dir();
    const auto rec = covtest::wilks_threshold(covtest::DetectorId::lmpit_sph, {3, 1}, 50, 0.1);
    const fs::path recpath = d / "rec.json";
    write_text(recpath, covtest::threshold_to_json(rec));
    const fs::path csv = d / "mismatch.csv";
    const auto data = covtest::sample_gaussian(covtest::ComplexMatrix::identity(2), {2, 1},
                                               30, 6, 0);
    std::ostringstream ss;
    covtest::write_samples_csv(ss, data);
    write_text(csv, ss.str());
    const CliResult r = run_cli("detect --input " + csv.string() +
                                " --L 2 --N 1 --detector lmpit-corr --threshold-file " +
                                recpath.string());
    CHECK(r.code == 3);
}

TEST_CASE("cli: simulate reports missing config fields") {
    const fs::path d = scratch_dir();
    const fs::path cfg = d / "missing_l.json";
    write_text(cfg, R"({"scenario":{"model":"circulant","kind":"correlation","N":4,
                        "omega":[0.5,1.5]},"detectors":["lmpit-corr"],
                        "m_values":[8],"trials":50})");
    const CliResult r = run_cli("simulate roc --config " + cfg.string() + " --out " +
                                (d / "out1").string() + " --seed 3");
    CHECK(r.code == 2);
    CHECK(r.err.find("L") != std::string::npos);
}

TEST_CASE("cli: simulate rejects config-level precondition violations") {
    const fs::path d = scratch_dir();
    const fs::path cfg = d / "low_m.json";
    write_text(cfg, R"({"scenario":{"model":"circulant","kind":"correlation","L":3,"N":2,
                        "omega":[0.5,1.0,1.5]},"detectors":["glrt-corr"],
                        "m_values":[4],"trials":50})");  // glrt needs M >= 6
    const CliResult r = run_cli("simulate roc --config " + cfg.string() + " --out " +
                                (d / "outp").string() + " --seed 3");
    CHECK(r.code == 2);
    CHECK(r.err.find("M >= 6") != std::string::npos);
}

TEST_CASE("cli: simulate roc is reproducible and worker-independent") {
    const fs::path d = scratch_dir();
    const fs::path cfg = d / "roc.json";
    write_text(cfg, R"({"scenario":{"model":"circulant","kind":"correlation","L":2,"N":1,
                        "omega":[0.6,1.4]},"detectors":["lmpit-corr","glrt-corr"],
                        "m_values":[6,10],"trials":80,"pfa":0.25})");
    const CliResult r1 = run_cli("simulate roc --config " + cfg.string() + " --out " +
                                 (d / "runA").string() + " --seed 11 --workers 1");
    REQUIRE(r1.code == 0);
    const CliResult r2 = run_cli("simulate roc --config " + cfg.string() + " --out " +
                                 (d / "runB").string() + " --seed 11 --workers 3");
    REQUIRE(r2.code == 0);
    const std::string a = slurp(d / "runA" / "roc.csv");
    const std::string b = slurp(d / "runB" / "roc.csv");
    REQUIRE(!a.empty());
    CHECK(a == b);
    CHECK(slurp(d / "runA" / "roc_meta.json") == slurp(d / "runB" / "roc_meta.json"));
    CHECK(a.rfind("detector,m,pfa,pd\n", 0) == 0);
    // rows for both detectors and both m values
    for (const char* needle : {"lmpit-corr,6", "lmpit-corr,10", "glrt-corr,6", "glrt-corr,10"})
        CHECK(a.find(needle) != std::string::npos);
}

TEST_CASE("cli: invariance subcommand reports a pass") {
    const CliResult r = run_cli(
        "invariance --detector lmpit-sph --L 3 --N 2 --M 12 --trials 10 --seed 21");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j.at("group") == "sphericity");
    CHECK(j.at("pass").get<bool>());
    CHECK(j.at("max_rel_dev").get<double>() < 1e-8);
}

TEST_CASE("cli: detect false-alarm rate matches the calibrated pfa") {
    // one threshold, many H0-drawn files through the full CLI path
    const fs::path d = scratch_dir() / "rate";
    fs::create_directories(d);
    const covtest::BlockGeometry g{2, 1};
    const double pfa = 0.05;
    const auto rec = covtest::empirical_threshold(covtest::DetectorId::lmpit_corr, g, 25, pfa,
                                                  4000, 909, 1);
    char thr[64];
    std::snprintf(thr, sizeof(thr), "%.17g", rec.threshold);
    int h0_count = 0;
    const int files = 1000;
    for (int i = 0; i < files; ++i) {
        const fs::path csv = d / ("f" + std::to_string(i) + ".csv");
        const auto data = covtest::sample_gaussian(covtest::ComplexMatrix::identity(2), g, 25,
                                                   5000, 1000 + i);
        std::ostringstream ss;
        covtest::write_samples_csv(ss, data);
        write_text(csv, ss.str());
        const CliResult r = run_cli("detect --input " + csv.string() +
                                    " --L 2 --N 1 --detector lmpit-corr --threshold " + thr);
        REQUIRE(r.code == 0);
        if (r.out.find("\"decision\": \"H0\"") != std::string::npos) ++h0_count;
    }
    const double rate = static_cast<double>(h0_count) / files;
    // binomial 4 sigma plus slack for the threshold estimation error
    CHECK(std::abs(rate - (1.0 - pfa)) < 0.035);
}
