#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include <unistd.h>

#include <jplay/classify.hpp>
#include <jplay/data.hpp>

#include "test_util.hpp"

using namespace jplay;
using Eigen::MatrixXd;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("jplay_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("load_csv: samples-as-rows transposition", "[data]") {
    TempDir tmp;
    detail::write_file_atomic(tmp.file("a.csv"), "1,2\n3,4\n");
    const Dataset ds = load_csv(tmp.file("a.csv"), Orientation::SamplesAsRows);
    REQUIRE(ds.dim() == 2);
    REQUIRE(ds.samples() == 2);
    REQUIRE(ds.x(0, 0) == 1.0);
    REQUIRE(ds.x(1, 0) == 2.0);
    REQUIRE(ds.x(0, 1) == 3.0);
    REQUIRE(ds.x(1, 1) == 4.0);

    const Dataset dc = load_csv(tmp.file("a.csv"), Orientation::SamplesAsColumns);
    REQUIRE(dc.dim() == 2);
    REQUIRE(dc.x(0, 1) == 2.0);
}

TEST_CASE("load_csv: label column and class count", "[data]") {
    TempDir tmp;
    detail::write_file_atomic(tmp.file("b.csv"), "f0,f1,cls\n0.5,1.5,1\n2.5,3.5,2\n");
    const Dataset ds = load_csv(tmp.file("b.csv"), Orientation::SamplesAsRows,
                                std::string("cls"));
    REQUIRE(ds.dim() == 2);
    REQUIRE(ds.samples() == 2);
    REQUIRE(ds.labels == std::vector<int>{1, 2});
    REQUIRE(ds.num_classes == 2);
    REQUIRE(ds.feature_names == std::vector<std::string>{"f0", "f1"});

    // 0-based index into a headerless file
    detail::write_file_atomic(tmp.file("c.csv"), "0.5,1.5,1\n2.5,3.5,2\n");
    const Dataset dc = load_csv(tmp.file("c.csv"), Orientation::SamplesAsRows,
                                std::string("2"));
    REQUIRE(dc.labels == std::vector<int>{1, 2});
}

TEST_CASE("load_csv: parse errors carry line numbers", "[data]") {
    TempDir tmp;
    detail::write_file_atomic(tmp.file("empty.csv"), "");
    REQUIRE_THROWS_AS(load_csv(tmp.file("empty.csv"), Orientation::SamplesAsRows),
                      FormatError);

    detail::write_file_atomic(tmp.file("ragged.csv"), "1,2\n3\n");
    REQUIRE_THROWS_WITH(load_csv(tmp.file("ragged.csv"), Orientation::SamplesAsRows),
                        Catch::Matchers::ContainsSubstring("line 2"));

    detail::write_file_atomic(tmp.file("alpha.csv"), "1,2\n3,x\n");
    REQUIRE_THROWS_WITH(load_csv(tmp.file("alpha.csv"), Orientation::SamplesAsRows),
                        Catch::Matchers::ContainsSubstring("line 2"));

    REQUIRE_THROWS_AS(load_csv(tmp.file("missing.csv"), Orientation::SamplesAsRows),
                      InputError);
}

TEST_CASE("save_csv / load_csv round trip", "[data]") {
    TempDir tmp;
    testutil::Rng rng(1);
    Dataset ds;
    ds.x = rng.matrix(3, 7);
    ds.labels = {1, 2, 1, 2, 3, 3, 1};
    ds.num_classes = 3;
    save_csv(ds, tmp.file("rt.csv"));
    const Dataset back = load_csv(tmp.file("rt.csv"), Orientation::SamplesAsRows,
                                  std::string("cls"));
    REQUIRE(back.labels == ds.labels);
    REQUIRE(back.dim() == 3);
    REQUIRE(back.samples() == 7);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 7; ++j)
            REQUIRE(back.x(i, j) == ds.x(i, j));  // shortest-round-trip is exact
}

TEST_CASE("jpld: bit-exact round trip and fixed layout", "[data]") {
    TempDir tmp;
    testutil::Rng rng(2);
    Dataset ds;
    ds.x = rng.matrix(7, 13);
    for (int i = 0; i < 13; ++i) ds.labels.push_back(i % 3);  // includes unlabeled 0
    ds.num_classes = 2;
    save_jpld(ds, tmp.file("a.jpld"));
    const Dataset back = load_jpld(tmp.file("a.jpld"));
    REQUIRE(testutil::bitwise_equal(back.x, ds.x));
    REQUIRE(back.labels == ds.labels);
    save_jpld(back, tmp.file("b.jpld"));
    REQUIRE(detail::read_file(tmp.file("a.jpld")) == detail::read_file(tmp.file("b.jpld")));

    // 1x1 unlabeled dataset: 4 + 1 + 8 + 8 + 8 + 4 = 33 bytes
    Dataset tiny;
    tiny.x = MatrixXd::Zero(1, 1);
    tiny.labels = {0};
    save_jpld(tiny, tmp.file("tiny.jpld"));
    REQUIRE(std::filesystem::file_size(tmp.file("tiny.jpld")) == 33);
    const Dataset tiny_back = load_jpld(tmp.file("tiny.jpld"));
    REQUIRE(tiny_back.x(0, 0) == 0.0);
    REQUIRE_FALSE(tiny_back.has_labels());
}

TEST_CASE("jpld: format errors name the offset", "[data]") {
    TempDir tmp;
    detail::write_file_atomic(tmp.file("bad.jpld"), "NOPE");
    REQUIRE_THROWS_WITH(load_jpld(tmp.file("bad.jpld")),
                        Catch::Matchers::ContainsSubstring("offset 0"));

    std::string v2 = "JPLD";
    v2.push_back(2);
    detail::write_file_atomic(tmp.file("v2.jpld"), v2);
    REQUIRE_THROWS_WITH(load_jpld(tmp.file("v2.jpld")),
                        Catch::Matchers::ContainsSubstring("offset 4"));

    Dataset ds;
    ds.x = MatrixXd::Ones(2, 3);
    ds.labels = {1, 1, 2};
    save_jpld(ds, tmp.file("ok.jpld"));
    std::string content = detail::read_file(tmp.file("ok.jpld"));
    detail::write_file_atomic(tmp.file("short.jpld"), content.substr(0, content.size() - 5));
    REQUIRE_THROWS_AS(load_jpld(tmp.file("short.jpld")), FormatError);
    detail::write_file_atomic(tmp.file("long.jpld"), content + "xx");
    REQUIRE_THROWS_WITH(load_jpld(tmp.file("long.jpld")),
                        Catch::Matchers::ContainsSubstring("trailing"));
}

TEST_CASE("normalize: unit-columns", "[data]") {
    MatrixXd x(2, 2);
    x << 2, 1, 0, 0;  // column norms 2 and 1
    auto [out, params] = normalize(x, NormalizeMode::UnitColumns);
    REQUIRE(params.column_scale == 2.0);
    REQUIRE(out(0, 0) == 1.0);
    REQUIRE(out(0, 1) == 0.5);
    REQUIRE(out.colwise().norm().maxCoeff() == Catch::Approx(1.0).epsilon(1e-12));

    // replay on test data
    MatrixXd fresh(2, 1);
    fresh << 4, 0;
    REQUIRE(apply_normalize(params, fresh)(0, 0) == 2.0);
}

TEST_CASE("normalize: zscore uses the population denominator", "[data]") {
    MatrixXd x(1, 2);
    x << 0, 2;
    auto [out, params] = normalize(x, NormalizeMode::ZScoreFeatures);
    REQUIRE(out(0, 0) == Catch::Approx(-1.0).epsilon(1e-14));
    REQUIRE(out(0, 1) == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(params.degenerate_features.empty());

    MatrixXd flat(2, 3);
    flat << 1, 1, 1, 0, 1, 2;
    auto [out2, params2] = normalize(flat, NormalizeMode::ZScoreFeatures);
    REQUIRE(params2.degenerate_features == std::vector<int>{0});
    REQUIRE(out2.row(0).isZero(0.0));
}

TEST_CASE("normalize: minmax", "[data]") {
    MatrixXd x(1, 3);
    x << 3, 5, 7;
    auto [out, params] = normalize(x, NormalizeMode::MinMaxFeatures);
    REQUIRE(out(0, 0) == 0.0);
    REQUIRE(out(0, 1) == 0.5);
    REQUIRE(out(0, 2) == 1.0);
}

TEST_CASE("synth_blobs: determinism and degenerate noise", "[data]") {
    const Dataset a = synth_blobs(3, 5, 4, 2.0, 0.3, 99);
    const Dataset b = synth_blobs(3, 5, 4, 2.0, 0.3, 99);
    REQUIRE(testutil::bitwise_equal(a.x, b.x));
    REQUIRE(a.labels == b.labels);

    const Dataset zero_noise = synth_blobs(2, 4, 3, 2.0, 0.0, 5);
    for (int s = 1; s < 4; ++s)
        REQUIRE(testutil::bitwise_equal(zero_noise.x.col(s), zero_noise.x.col(0)));

    REQUIRE_THROWS_AS(synth_blobs(1, 5, 4, 2.0, 0.3, 0), ParameterError);
    REQUIRE_THROWS_AS(synth_blobs(2, 0, 4, 2.0, 0.3, 0), ParameterError);
}

TEST_CASE("synth_blobs: extreme separation classifies perfectly", "[data]") {
    const Dataset ds = synth_blobs(3, 20, 6, 100.0, 1.0, 17);
    auto [train_idx, test_idx] = train_test_split_per_class(ds.labels, 10, 18);
    const Dataset train = subset(ds, train_idx);
    const Dataset test = subset(ds, test_idx);
    const std::vector<int> pred = nn_classify(train.x, train.labels, test.x);
    REQUIRE(overall_accuracy(pred, test.labels) == 1.0);
}

TEST_CASE("train_test_split_per_class: sizes and disjointness", "[data]") {
    const Dataset ds = synth_blobs(3, 10, 4, 2.0, 0.5, 3);
    auto [train, test] = train_test_split_per_class(ds.labels, 6, 4);
    REQUIRE(train.size() == 18);
    REQUIRE(test.size() == 12);
    for (int t : train) REQUIRE(std::find(test.begin(), test.end(), t) == test.end());
    REQUIRE_THROWS_AS(train_test_split_per_class(ds.labels, 10, 4), InputError);
}
