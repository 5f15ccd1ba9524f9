#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ntclust/data_io.hpp"
#include "ntclust/learning.hpp"
#include "oracles.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

using nt::Mat;
using nt::Vec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ntclust_io_test_" + std::to_string(::getpid()));
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

}  // namespace

TEST_CASE("csv rows load as sample columns") {
    TempDir dir;
    spit(dir.file("d.csv"), "1,2\n3,4\n");
    const Mat m = nt::load_matrix(dir.file("d.csv"), nt::MatrixFormat::csv);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 2);
    CHECK(m(0, 0) == 1);
    CHECK(m(1, 0) == 2);
    CHECK(m(0, 1) == 3);
    CHECK(m(1, 1) == 4);
}

TEST_CASE("ragged csv rows are rejected with the line number") {
    TempDir dir;
    spit(dir.file("bad.csv"), "1,2\n3\n");
    try {
        nt::load_matrix(dir.file("bad.csv"), nt::MatrixFormat::csv);
        FAIL("expected a data error");
    } catch (const nt::data_error& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("csv round trip preserves doubles exactly") {
    TempDir dir;
    std::mt19937_64 rng(51);
    const Mat m = oracle::random_mat(rng, 4, 7, 3.0);
    nt::save_matrix(m, dir.file("m.csv"), nt::MatrixFormat::csv);
    const Mat back = nt::load_matrix(dir.file("m.csv"), nt::MatrixFormat::csv);
    CHECK(back == m);
}

TEST_CASE("binary round trip is bit identical") {
    TempDir dir;
    std::mt19937_64 rng(52);
    const Mat m = oracle::random_mat(rng, 5, 3, 10.0);
    nt::save_matrix(m, dir.file("m.ntb"), nt::MatrixFormat::binary);
    const Mat back = nt::load_matrix(dir.file("m.ntb"), nt::MatrixFormat::binary);
    CHECK(back == m);
    // re-saving produces the same bytes
    nt::save_matrix(back, dir.file("m2.ntb"), nt::MatrixFormat::binary);
    CHECK(slurp(dir.file("m.ntb")) == slurp(dir.file("m2.ntb")));
}

TEST_CASE("binary files carry the NTB1 magic") {
    TempDir dir;
    nt::save_matrix(Mat::Identity(2, 2), dir.file("m.ntb"), nt::MatrixFormat::binary);
    CHECK(slurp(dir.file("m.ntb")).substr(0, 4) == "NTB1");
    spit(dir.file("junk.ntb"), "XXXXsomething");
    CHECK_THROWS_AS(nt::load_matrix(dir.file("junk.ntb"), nt::MatrixFormat::binary), nt::data_error);
}

TEST_CASE("empty matrices are rejected") {
    TempDir dir;
    spit(dir.file("empty.csv"), "");
    CHECK_THROWS_AS(nt::load_matrix(dir.file("empty.csv"), nt::MatrixFormat::csv), nt::data_error);
}

TEST_CASE("standardize centers and scales each sample") {
    Mat m(2, 1);
    m << 1, 3;
    const Mat s = nt::standardize(m);
    CHECK(s(0, 0) == doctest::Approx(-1.0));
    CHECK(s(1, 0) == doctest::Approx(1.0));
    CHECK((nt::standardize(s) - s).norm() < 1e-12);
}

TEST_CASE("standardize rejects constant samples naming the index") {
    Mat m(2, 2);
    m << 1, 5, 2, 5;
    try {
        nt::standardize(m);
        FAIL("expected a data error");
    } catch (const nt::data_error& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("synthetic clusters are deterministic with separated centroids") {
    const auto [a, la] = nt::synth_clusters(3, 5, 4, 0.5, 77);
    const auto [b, lb] = nt::synth_clusters(3, 5, 4, 0.5, 77);
    CHECK(a == b);
    CHECK(la.labels == lb.labels);

    // label counts: 4 of each of 1..3, cluster-major
    for (int c = 1; c <= 3; ++c)
        CHECK(std::count(la.labels.begin(), la.labels.end(), c) == 4);

    // centroid separation holds for the generated clusters
    Mat cents = Mat::Zero(5, 3);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 4; ++i) cents.col(c) += a.col(c * 4 + i);
        cents.col(c) /= 4.0;
    }
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            CHECK((cents.col(i) - cents.col(j)).norm() > 10.0 * 0.5 - 2.0);

    // vanishing spread collapses points onto their centroid
    const auto [tight, lt] = nt::synth_clusters(2, 3, 5, 1e-9, 7);
    for (int i = 0; i < 5; ++i)
        CHECK((tight.col(i) - tight.col(0)).norm() < 1e-6);
}

TEST_CASE("model files round trip bit identically") {
    TempDir dir;
    nt::HyperParams hyper;
    hyper.M = 4;
    hyper.C_d = 2;
    hyper.C_s = 2;
    hyper.lambda0 = 0.25;
    hyper.seed = 9;
    const auto model = nt::init_model(3, hyper, 9);
    nt::save_model(model, hyper, dir.file("m.ntm"));
    CHECK(slurp(dir.file("m.ntm")).substr(0, 4) == "NTM1");

    nt::HyperParams loaded_hyper;
    const auto loaded = nt::load_model(dir.file("m.ntm"), &loaded_hyper);
    CHECK(loaded.A == model.A);
    CHECK(loaded.identity_mode == model.identity_mode);
    for (int c = 0; c < 2; ++c) {
        CHECK(loaded.params.taus[c] == model.params.taus[c]);
        CHECK(loaded.params.nus[c] == model.params.nus[c]);
    }
    CHECK(loaded_hyper.lambda0 == hyper.lambda0);
    CHECK(loaded_hyper.seed == hyper.seed);

    nt::save_model(loaded, loaded_hyper, dir.file("m2.ntm"));
    CHECK(slurp(dir.file("m.ntm")) == slurp(dir.file("m2.ntm")));
}

TEST_CASE("model loader rejects corrupt files") {
    TempDir dir;
    spit(dir.file("bad.ntm"), "ABCD123");
    CHECK_THROWS_AS(nt::load_model(dir.file("bad.ntm")), nt::data_error);

    nt::HyperParams hyper;
    hyper.M = 3;
    hyper.C_d = 1;
    hyper.C_s = 1;
    const auto model = nt::init_model(2, hyper, 1);
    nt::save_model(model, hyper, dir.file("ok.ntm"));
    std::string bytes = slurp(dir.file("ok.ntm"));
    // truncation
    spit(dir.file("short.ntm"), bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(nt::load_model(dir.file("short.ntm")), nt::data_error);
    // dimension tampering
    bytes[4] = static_cast<char>(0xFF);
    bytes[5] = static_cast<char>(0xFF);
    spit(dir.file("tampered.ntm"), bytes);
    CHECK_THROWS_AS(nt::load_model(dir.file("tampered.ntm")), nt::data_error);
}

TEST_CASE("label files round trip") {
    TempDir dir;
    nt::Partition p;
    p.labels = {3, 1, 4, 1, 5};
    nt::save_labels(p, dir.file("l.txt"));
    CHECK(nt::load_labels(dir.file("l.txt")).labels == p.labels);
}

TEST_CASE("config json honors defaults and rejects unknown keys") {
    const nt::HyperParams defaults;
    const auto parsed = nt::parse_config_json("{}");
    CHECK(parsed.lambda0 == defaults.lambda0);
    CHECK(parsed.M == defaults.M);
    CHECK(parsed.batch_fraction == defaults.batch_fraction);

    const auto partial = nt::parse_config_json("{\"lambda0\": 0.5, \"C_d\": 4}");
    CHECK(partial.lambda0 == 0.5);
    CHECK(partial.C_d == 4);
    CHECK(partial.lambda1 == defaults.lambda1);

    CHECK_THROWS_AS(nt::parse_config_json("{\"lambda9\": 1.0}"), nt::config_error);
    CHECK_THROWS_AS(nt::parse_config_json("not json"), nt::config_error);

    // round trip through the serializer
    nt::HyperParams h = defaults;
    h.lambda0 = 1.25;
    h.C_s = 3;
    h.seed = 17;
    const auto back = nt::parse_config_json(nt::config_to_json(h));
    CHECK(back.lambda0 == h.lambda0);
    CHECK(back.C_s == h.C_s);
    CHECK(back.seed == h.seed);
}
