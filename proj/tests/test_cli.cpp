// Exercises the installed CLI binary end to end: exit codes, file outputs,
// and byte-identical replay under a fixed seed.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace {

const std::string kCli = LSID_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "lsid_cli_test";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("simulate: row count and byte-identical replay") {
    const auto dir = temp_dir();
    const std::string out1 = (dir / "traj1.csv").string();
    const std::string out2 = (dir / "traj2.csv").string();
    REQUIRE(run("simulate --scalar-a 0.9 --T 100 --sigma 1 --seed 7 --out " + out1) == 0);
    REQUIRE(run("simulate --scalar-a 0.9 --T 100 --sigma 1 --seed 7 --out " + out2) == 0);

    const std::string csv = slurp(out1);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 102);  // header + 101 states
    CHECK(csv == slurp(out2));
}

TEST_CASE("estimate: noiseless recovery through the file interface") {
    const auto dir = temp_dir();
    const std::string traj = (dir / "noiseless.csv").string();
    const std::string est = (dir / "est.json").string();
    REQUIRE(run("simulate --scalar-a 0.8 --T 30 --sigma 0 --x0 1 --seed 1 --out " + traj) == 0);
    REQUIRE(run("estimate --traj " + traj + " --truth-scalar-a 0.8 --out " + est) == 0);
    const auto j = nlohmann::json::parse(slurp(est));
    CHECK(j.at("op_error").get<double>() <= 1e-10);
    CHECK(j.at("a_hat")[0][0].get<double>() == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("verify packing: JSON certificate and exit 0") {
    const auto dir = temp_dir();
    const std::string cert = (dir / "packing.json").string();
    REQUIRE(run("verify packing --d 3 --eps0 0.003 --seed 1 --out " + cert) == 0);
    const auto j = nlohmann::json::parse(slurp(cert));
    CHECK(j.at("member_count").get<int>() >= 4);
    CHECK(j.at("min_op_separation").get<double>() >= 0.003 / 4.0 - 1e-10);
}

TEST_CASE("sweep: deterministic CSV replay from a config file") {
    const auto dir = temp_dir();
    const std::string cfg_path = (dir / "cfg.json").string();
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({"system_spec": {"type": "scalar", "a": 0.5},
                   "T_grid": [50, 100, 200], "trials": 120,
                   "delta": 0.1, "master_seed": 5})";
    }
    const std::string out1 = (dir / "run1").string();
    const std::string out2 = (dir / "run2").string();
    REQUIRE(run("sweep --config " + cfg_path + " --out " + out1 + " --threads 2") == 0);
    REQUIRE(run("sweep --config " + cfg_path + " --out " + out2 + " --threads 1") == 0);
    CHECK(slurp(out1 + "/sweep.csv") == slurp(out2 + "/sweep.csv"));
    const auto summary = nlohmann::json::parse(slurp(out1 + "/sweep.json"));
    CHECK(summary.at("config").at("master_seed").get<int>() == 5);
    CHECK(summary.contains("version"));
}

TEST_CASE("exit codes: usage errors are 1") {
    CHECK(run("simulate --no-such-flag 3") == 1);
    CHECK(run("simulate --scalar-a 0.5 --rho 0.5 --T 10 --out /tmp/x.csv") == 1);  // ambiguous system
    CHECK(run("bound scalar --a 0.5 --eps 2.0") == 1);                             // eps out of range
    CHECK(run("") == 1);                                                           // missing subcommand
}

TEST_CASE("verify subcommands: pass with defaults") {
    CHECK(run("verify mgf --a 0.3 --nu 0.5 --mu 0.2 --x 1.0") == 0);
    CHECK(run("verify martingale --T 40 --trials 20000 --seed 2") == 0);
    CHECK(run("verify smallball --a 0.5 --k 2 --T 80 --trials 20000 --seed 2") == 0);
    CHECK(run("verify kl --rho 0 --d 1 --a-prime 0.2 --T 2 --trials 30000 --seed 3") == 0);
    CHECK(run("verify bmsb --scalar-a 0.5 --k 3 --trials 4000 --seed 4") == 0);
}

TEST_CASE("gramian: statistics CSV for a scaled orthogonal system") {
    const auto dir = temp_dir();
    const std::string out = (dir / "gram.csv").string();
    REQUIRE(run("gramian --rho 0.9 --d 3 --T 50 --out " + out) == 0);
    const std::string csv = slurp(out);
    CHECK(csv.rfind("t,lambda_min,lambda_max,trace,log_det\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
    CHECK(csv.find("\n1,1,") == csv.find('\n'));  // Gamma_1 = I: lambda_min = 1
}

TEST_CASE("gramian: block-length selection report") {
    const auto dir = temp_dir();
    const std::string txt = (dir / "gram_select.txt").string();
    // A = 0 scalar: largest k with 100/k >= log(1/0.1) is floor(100/log 10) = 43.
    const std::string cmd = kCli +
                            " gramian --scalar-a 0 --T 100 --select-delta 0.1 --cond-s 1"
                            " --out " +
                            (dir / "g.csv").string() + " > " + txt + " 2>/dev/null";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    const std::string report = slurp(txt);
    CHECK(report.find("block_length: 43") != std::string::npos);
    CHECK(report.find("block_length_diagonalizable: 43") != std::string::npos);
}

TEST_CASE("bound input and logdet subcommands") {
    const auto dir = temp_dir();
    const std::string a_csv = (dir / "A.csv").string();
    const std::string b_csv = (dir / "B.csv").string();
    {
        std::ofstream a(a_csv);
        a << "0.5,0.1\n0.0,0.4\n";
        std::ofstream b(b_csv);
        b << "1,0\n0,1\n";
    }
    const std::string out = (dir / "input_bound.json").string();
    REQUIRE(run("bound input --a-csv " + a_csv + " --b-csv " + b_csv +
                " --sigma-u 1 --k 2 --T 2000 --delta 0.1 --out " + out) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j.at("feasible").get<bool>());
    CHECK(j.at("value").get<double>() > 0.0);
    CHECK(j.at("constants_used").contains("C"));

    const std::string logdet_out = (dir / "logdet.json").string();
    REQUIRE(run("bound logdet --cond-s 1 --d 2 --T 100 --k 1 --block-sizes 2 --out " +
                logdet_out) == 0);
    const auto lj = nlohmann::json::parse(slurp(logdet_out));
    CHECK(lj.at("value").get<double>() == doctest::Approx(18.0 * std::log(100.0)));
}

TEST_CASE("lower-bound birge: KL budget") {
    const auto dir = temp_dir();
    const std::string out = (dir / "birge.json").string();
    REQUIRE(run("lower-bound birge --n-alternatives 2 --delta 0.1 --out " + out) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j.at("threshold").get<double>() == doctest::Approx(0.8 * std::log(10.0)));
}

TEST_CASE("lower-bound scalar: pinned threshold through the CLI") {
    const auto dir = temp_dir();
    const std::string out = (dir / "lb.json").string();
    REQUIRE(run("lower-bound scalar --a 1.0 --eps 0.1 --delta 0.05 --out " + out) == 0);
    const auto j = nlohmann::json::parse(slurp(out));
    CHECK(j.at("value").get<double>() == 5.0);
}

TEST_CASE("help text lists constants with defaults") {
    const std::string path = (temp_dir() / "help.txt").string();
    std::system((kCli + " lower-bound orthogonal --help > " + path + " 2>&1").c_str());
    const std::string help = slurp(path);
    CHECK(help.find("--c0") != std::string::npos);
    CHECK(help.find("--delta") != std::string::npos);
}
