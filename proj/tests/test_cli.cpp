#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace fs = std::filesystem;

#ifndef NTCLUST_CLI_PATH
#error "NTCLUST_CLI_PATH must point at the built command-line binary"
#endif

namespace {

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(NTCLUST_CLI_PATH) + " " + args + " 2>&1";
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 512> buf;
    while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.out += buf.data();
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ntclust_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    out << contents;
}

// a tiny fixed training setup shared by several cases
void make_fixture(const TempDir& dir) {
    const auto s = run("synth --clusters 2 --dim 5 --per-cluster 10 --spread 0.5 --seed 3 --out " +
                       dir.file("x.ntb") + " --labels " + dir.file("truth.txt"));
    REQUIRE(s.code == 0);
    spit(dir.file("cfg.json"),
         "{\"iterations\": 3, \"C_d\": 2, \"C_s\": 1, \"lambda0\": 0.5, \"lambda1\": 0.05,\n"
         " \"lambda2\": 4, \"lambdaE\": 0, \"batch_fraction\": 1.0, \"rho_online\": 1.0}");
}

}  // namespace

TEST_CASE("synth is deterministic in the seed") {
    TempDir dir;
    const std::string common = "synth --clusters 3 --dim 4 --per-cluster 5 --seed 11 ";
    REQUIRE(run(common + "--out " + dir.file("a.ntb") + " --labels " + dir.file("a.txt")).code == 0);
    REQUIRE(run(common + "--out " + dir.file("b.ntb") + " --labels " + dir.file("b.txt")).code == 0);
    CHECK(slurp(dir.file("a.ntb")) == slurp(dir.file("b.ntb")));
    CHECK(slurp(dir.file("a.txt")) == slurp(dir.file("b.txt")));

    std::istringstream labels(slurp(dir.file("a.txt")));
    int count = 0;
    for (std::string line; std::getline(labels, line);)
        if (!line.empty()) ++count;
    CHECK(count == 15);
}

TEST_CASE("train is reproducible and reports per-iteration progress") {
    TempDir dir;
    make_fixture(dir);
    const std::string common = "train --identity --data " + dir.file("x.ntb") + " --config " +
                               dir.file("cfg.json") + " --seed 7 --runs 1 --out-model ";
    const auto a = run(common + dir.file("a.ntm"));
    REQUIRE(a.code == 0);
    CHECK(a.out.find("final_objective") != std::string::npos);
    CHECK(a.out.find("termination") != std::string::npos);
    CHECK(a.out.find("best run 1") != std::string::npos);

    const auto b = run(common + dir.file("b.ntm"));
    REQUIRE(b.code == 0);
    CHECK(slurp(dir.file("a.ntm")) == slurp(dir.file("b.ntm")));
    // the per-run summary line (seed, final objective, termination) is identical
    CHECK(a.out.substr(0, a.out.find('\n')) == b.out.substr(0, b.out.find('\n')));
}

TEST_CASE("identity training yields perfectly conditioned incoherent maps") {
    TempDir dir;
    make_fixture(dir);
    REQUIRE(run("train --identity --data " + dir.file("x.ntb") + " --config " + dir.file("cfg.json") +
                " --seed 7 --out-model " + dir.file("m.ntm"))
                .code == 0);
    const auto r = run("inspect --model " + dir.file("m.ntm"));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("M=5 N=5") != std::string::npos);
    CHECK(r.out.find("kappa=1 ") != std::string::npos);
    CHECK(r.out.find("mu=0") != std::string::npos);
}

TEST_CASE("assign round trips through eval with full agreement") {
    TempDir dir;
    make_fixture(dir);
    REQUIRE(run("train --identity --data " + dir.file("x.ntb") + " --config " + dir.file("cfg.json") +
                " --seed 7 --out-model " + dir.file("m.ntm"))
                .code == 0);
    REQUIRE(run("assign --model " + dir.file("m.ntm") + " --data " + dir.file("x.ntb") +
                " --out-labels " + dir.file("pred.txt") + " --out-repr " + dir.file("y.ntb"))
                .code == 0);
    std::istringstream labels(slurp(dir.file("pred.txt")));
    int count = 0;
    for (std::string line; std::getline(labels, line);) {
        if (line.empty()) continue;
        const int l = std::stoi(line);
        CHECK(l >= 1);
        CHECK(l <= 2);
        ++count;
    }
    CHECK(count == 20);

    const auto self = run("eval --pred " + dir.file("pred.txt") + " --truth " + dir.file("pred.txt"));
    REQUIRE(self.code == 0);
    CHECK(self.out == "CA=1.0000 NMI=1.0000\n");

    // representations classify themselves perfectly with one neighbor
    const auto knn = run("knn --train-repr " + dir.file("y.ntb") + " --train-labels " +
                         dir.file("pred.txt") + " --test-repr " + dir.file("y.ntb") +
                         " --test-labels " + dir.file("pred.txt") + " --k 1");
    REQUIRE(knn.code == 0);
    CHECK(knn.out == "accuracy=1.0000\n");

    // oversized neighborhoods are a usage error
    const auto big = run("knn --train-repr " + dir.file("y.ntb") + " --train-labels " +
                         dir.file("pred.txt") + " --test-repr " + dir.file("y.ntb") +
                         " --test-labels " + dir.file("pred.txt") + " --k 999");
    CHECK(big.code == 1);
}

TEST_CASE("train accepts csv data") {
    TempDir dir;
    spit(dir.file("x.csv"), "1,0\n1.1,0.1\n0,5\n0.1,5.1\n");
    spit(dir.file("cfg.json"), "{\"iterations\": 2, \"C_d\": 2, \"C_s\": 1, \"lambdaE\": 0}");
    const auto r = run("train --identity --data " + dir.file("x.csv") + " --config " +
                       dir.file("cfg.json") + " --seed 1 --out-model " + dir.file("m.ntm"));
    CHECK(r.code == 0);
}

TEST_CASE("eval rejects mismatched label lengths") {
    TempDir dir;
    spit(dir.file("p.txt"), "1\n2\n");
    spit(dir.file("t.txt"), "1\n2\n1\n");
    CHECK(run("eval --pred " + dir.file("p.txt") + " --truth " + dir.file("t.txt")).code == 2);
}

TEST_CASE("assign rejects data of the wrong dimension") {
    TempDir dir;
    make_fixture(dir);
    REQUIRE(run("train --identity --data " + dir.file("x.ntb") + " --config " + dir.file("cfg.json") +
                " --seed 7 --out-model " + dir.file("m.ntm"))
                .code == 0);
    spit(dir.file("bad.csv"), "1,2,3\n");
    CHECK(run("assign --model " + dir.file("m.ntm") + " --data " + dir.file("bad.csv") +
              " --out-labels " + dir.file("out.txt"))
              .code == 2);
}

TEST_CASE("inspect rejects corrupt model files") {
    TempDir dir;
    spit(dir.file("junk.ntm"), "not a model");
    CHECK(run("inspect --model " + dir.file("junk.ntm")).code == 2);
}

TEST_CASE("unknown flags are usage errors") {
    TempDir dir;
    CHECK(run("synth --bogus 1 --out " + dir.file("x") + " --labels " + dir.file("l")).code == 1);
    CHECK(run("frobnicate").code == 1);
}
