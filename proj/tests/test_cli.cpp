#include <doctest.h>

#include <unistd.h>

#include <cmath>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cuspvb/data_io.hpp"
#include "cuspvb/serialize.hpp"

using namespace cuspvb;
namespace fs = std::filesystem;

namespace {

const char* cli = CUSPVB_CLI_PATH;

int run(const std::string& args) {
    std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("cuspvb_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("simulate writes the dataset and a round-trippable truth file") {
    TempDir dir;
    REQUIRE(run("simulate --p 6 -k 2 --n 40 --seed 5 --output-dir " + dir.str()) == 0);
    Dataset d = load_csv((dir.path / "data.csv").string(), true);
    CHECK(d.n() == 40);
    CHECK(d.p() == 6);
    LoadedTruth t = read_truth((dir.path / "truth.txt").string());
    CHECK(t.truth.active_factors == 2);
    CHECK(t.truth.Lambda_true.rows() == 6);
}

TEST_CASE("fit and eval produce parseable, consistent outputs") {
    TempDir dir;
    REQUIRE(run("simulate --p 6 -k 2 --n 60 --seed 5 --output-dir " + dir.str()) == 0);
    REQUIRE(run("fit --input " + (dir.path / "data.csv").string() +
                " --restarts 4 --seed 8 --max-cycles 400 --output-dir " + dir.str()) == 0);

    // summary manifest
    Manifest summary = read_manifest((dir.path / "fit_summary.manifest").string());
    CHECK(summary.kind == "fit-summary");
    CHECK(summary.number("final_elbo") < 0.0);
    CHECK(summary.at("seed") == "8");
    int best = std::stoi(summary.at("best_restart"));
    CHECK(best >= 0);
    CHECK(best < 4);

    // trace file: parseable, one block per restart, non-decreasing elbo
    std::ifstream trace(dir.path / "elbo_trace.csv");
    std::string line;
    REQUIRE(std::getline(trace, line));
    CHECK(line == "restart,cycle,elbo");
    std::map<int, std::vector<double>> traces;
    while (std::getline(trace, line)) {
        std::stringstream ss(line);
        std::string r, c, e;
        REQUIRE(std::getline(ss, r, ','));
        REQUIRE(std::getline(ss, c, ','));
        REQUIRE(std::getline(ss, e, ','));
        traces[std::stoi(r)].push_back(std::stod(e));
    }
    CHECK(traces.size() == 4);
    for (const auto& [r, t] : traces) {
        CHECK(!t.empty());
        for (std::size_t i = 1; i < t.size(); ++i)
            CHECK(t[i] >= t[i - 1] - 1e-8 * std::fabs(t[i - 1]));
    }

    // eval against the same dataset plus the truth manifest round trip
    REQUIRE(run("eval --input " + (dir.path / "data.csv").string() + " --params " +
                (dir.path / "fit_params.txt").string() + " --truth " +
                (dir.path / "truth.txt").string() +
                " --draws 200 --seed 2 --deviations --output-dir " + dir.str()) == 0);
    Manifest metrics = read_manifest((dir.path / "metrics.manifest").string());
    CHECK(metrics.number("mse") >= 0.0);
    CHECK(metrics.number("mse") < 1.0);
    CHECK(metrics.at("true_active_factors") == "2");
    CHECK(metrics.number("draws") == 200);

    std::ifstream dev(dir.path / "deviations.csv");
    REQUIRE(std::getline(dev, line));
    CHECK(line == "j,q,sample_correlation,mean_squared_deviation");
    int rows = 0;
    while (std::getline(dev, line)) ++rows;
    CHECK(rows == 6 * 7 / 2);
}

TEST_CASE("identical seeds give byte-identical outputs") {
    // identical command lines run from two different working directories
    TempDir a, b;
    for (const auto& dir : {a.str(), b.str()}) {
        auto in = [&](const std::string& args) {
            std::string cmd =
                "cd " + dir + " && " + cli + " " + args + " >/dev/null 2>&1";
            return std::system(cmd.c_str());
        };
        REQUIRE(in("simulate --p 5 -k 2 --n 30 --seed 3 --output-dir .") == 0);
        REQUIRE(in("fit --input data.csv --restarts 3 --seed 4 --max-cycles 300"
                   " --output-dir .") == 0);
        REQUIRE(in("eval --input data.csv --params fit_params.txt --draws 100 --seed 5"
                   " --output-dir .") == 0);
    }
    for (const char* name : {"data.csv", "truth.txt", "fit_params.txt", "elbo_trace.csv",
                             "fit_summary.manifest", "metrics.manifest"}) {
        CAPTURE(name);
        std::string left = slurp(a.path / name);
        CHECK(!left.empty());
        CHECK(left == slurp(b.path / name));
    }
}

TEST_CASE("failures exit nonzero with diagnostics") {
    TempDir dir;
    CHECK(run("fit --input /nonexistent.csv --output-dir " + dir.str()) != 0);
    CHECK(run("eval --input /nonexistent.csv --params /also/missing") != 0);
    CHECK(run("fit") != 0);        // missing required --input
    CHECK(run("bogus-subcommand") != 0);
    CHECK(run("simulate --p 3 -k 9 --output-dir " + dir.str()) != 0);  // k > p

    // mismatched dimensions between dataset and fitted parameters
    REQUIRE(run("simulate --p 5 -k 2 --n 30 --seed 1 --output-dir " + dir.str()) == 0);
    REQUIRE(run("fit --input " + dir.str() + "/data.csv --restarts 2 --seed 1" +
                " --max-cycles 200 --output-dir " + dir.str()) == 0);
    fs::path other = dir.path / "other";
    fs::create_directories(other);
    REQUIRE(run("simulate --p 4 -k 2 --n 30 --seed 1 --output-dir " + other.string()) == 0);
    CHECK(run("eval --input " + (other / "data.csv").string() + " --params " +
              (dir.path / "fit_params.txt").string() + " --output-dir " + dir.str()) != 0);
}

TEST_CASE("config file values are overridden by explicit flags") {
    TempDir dir;
    std::ofstream cfg(dir.path / "run.ini");
    cfg << "[simulate]\np=7\nfactors=2\nn=25\nseed=9\noutput-dir=" << dir.str() << "\n";
    cfg.close();
    REQUIRE(run("--config " + (dir.path / "run.ini").string() + " simulate") == 0);
    CHECK(load_csv((dir.path / "data.csv").string(), true).p() == 7);

    REQUIRE(run("--config " + (dir.path / "run.ini").string() + " simulate --p 4") == 0);
    CHECK(load_csv((dir.path / "data.csv").string(), true).p() == 4);
}
