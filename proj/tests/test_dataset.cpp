#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "hetgnn/dataset.hpp"
#include "oracles.hpp"

using namespace hetgnn;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& content, const std::string& name) {
        path = std::string("dataset_test_") + name + ".txt";
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("load_series transposes rows to variables") {
    TempFile f("1,2\n3,4\n5,6\n", "basic");
    SeriesMatrix m = load_series(f.path);
    REQUIRE(m.n() == 2);
    REQUIRE(m.L() == 3);
    CHECK(m.values(0, 0) == 1);
    CHECK(m.values(0, 1) == 3);
    CHECK(m.values(0, 2) == 5);
    CHECK(m.values(1, 0) == 2);
    CHECK(m.values(1, 1) == 4);
    CHECK(m.values(1, 2) == 6);
    CHECK(m.variable_ids[0] == "v0");
    CHECK(m.variable_ids[1] == "v1");
}

TEST_CASE("load_series reports parse errors with row and column") {
    TempFile f("1,x\n", "badfield");
    CHECK_THROWS_WITH_AS(load_series(f.path), doctest::Contains("row 1, column 2"), ParseError);
}

TEST_CASE("load_series rejects ragged rows naming the row") {
    TempFile f("1,2\n3,4,5\n", "ragged");
    CHECK_THROWS_WITH_AS(load_series(f.path), doctest::Contains("line 2"), FormatError);
}

TEST_CASE("load_series rejects non-finite fields and single columns") {
    TempFile inf_file("1,inf\n2,3\n", "inf");
    CHECK_THROWS_AS(load_series(inf_file.path), ParseError);
    TempFile one_col("1\n2\n", "onecol");
    CHECK_THROWS_AS(load_series(one_col.path), DimensionError);
}

TEST_CASE("load_series skips a single header row when asked") {
    TempFile f("a,b\n1,2\n3,4\n", "header");
    SeriesMatrix m = load_series(f.path, ',', true);
    CHECK(m.L() == 2);
    CHECK_THROWS_AS(load_series(f.path, ',', false), ParseError);
}

TEST_CASE("load_series honors alternative delimiters") {
    TempFile f("1\t2\n3\t4\n", "tabs");
    SeriesMatrix m = load_series(f.path, '\t');
    CHECK(m.n() == 2);
    CHECK(m.values(1, 1) == 4);
}

TEST_CASE("max-abs normalization fits on the given range only") {
    SeriesMatrix m;
    m.values = Matrix(2, 3);
    m.values(0, 0) = 2; m.values(0, 1) = -4; m.values(0, 2) = 1;
    m.values(1, 0) = 0; m.values(1, 1) = 0;  m.values(1, 2) = 0;
    m.variable_ids = {"v0", "v1"};

    auto [norm, scales] = normalize(m, Normalization::max_abs, {0, 3});
    CHECK(scales[0] == 4.0);
    CHECK(norm.values(0, 0) == doctest::Approx(0.5));
    CHECK(norm.values(0, 1) == doctest::Approx(-1.0));
    CHECK(norm.values(0, 2) == doctest::Approx(0.25));
    // all-zero variable keeps scale 1 and stays unchanged
    CHECK(scales[1] == 1.0);
    CHECK(norm.values(1, 2) == 0.0);

    auto [same, ones] = normalize(m, Normalization::none, {0, 3});
    CHECK(ones[0] == 1.0);
    CHECK(same.values(0, 1) == -4.0);

    // fitting on a prefix ignores the later values
    auto [norm2, scales2] = normalize(m, Normalization::max_abs, {0, 1});
    CHECK(scales2[0] == 2.0);
    CHECK(norm2.values(0, 1) == doctest::Approx(-2.0));
}

TEST_CASE("normalize/denormalize round-trip") {
    oracle::TestRng rng(5);
    SeriesMatrix m;
    m.values = Matrix(3, 40);
    for (double& x : m.values.v) x = rng.uniform(-50.0, 50.0);
    auto [norm, scales] = normalize(m, Normalization::max_abs, {0, 25});
    SeriesMatrix back = denormalize(norm, scales);
    for (std::size_t i = 0; i < m.values.v.size(); ++i) {
        const double a = m.values.v[i], b = back.values.v[i];
        CHECK(std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)));
    }
}

TEST_CASE("chronological_split puts boundaries at floor ratios") {
    SeriesMatrix m;
    m.values = Matrix(2, 100);
    DatasetConfig cfg;
    cfg.window_T = 8;
    cfg.horizon_h = 3;
    SplitRanges r = chronological_split(m, cfg);
    CHECK(r.train.begin == 0);
    CHECK(r.train.end == 60);
    CHECK(r.valid.begin == 60);
    CHECK(r.valid.end == 80);
    CHECK(r.test.begin == 80);
    CHECK(r.test.end == 100);
}

TEST_CASE("chronological_split on the benchmark length 7588") {
    SeriesMatrix m;
    m.values = Matrix(2, 7588);
    DatasetConfig cfg;  // T=32, h=3
    SplitRanges r = chronological_split(m, cfg);
    CHECK(r.train.end == 4552);
    CHECK(r.valid.end == 6070);
    CHECK(r.test.end == 7588);
}

TEST_CASE("chronological_split error states a minimum length") {
    SeriesMatrix m;
    m.values = Matrix(2, 10);
    DatasetConfig cfg;  // T=32: nothing fits
    CHECK_THROWS_WITH_AS(chronological_split(m, cfg), doctest::Contains("need at least L="), DimensionError);
}

TEST_CASE("make_samples counts and indexing") {
    SeriesMatrix m;
    m.values = Matrix(2, 60);
    for (std::size_t t = 0; t < 60; ++t) {
        m.values(0, t) = static_cast<double>(t);
        m.values(1, t) = static_cast<double>(100 + t);
    }
    DatasetConfig cfg;
    cfg.window_T = 32;
    cfg.horizon_h = 3;

    auto samples = make_samples(m, {0, 40}, cfg);
    CHECK(samples.size() == 6);  // 40 - 32 - 3 + 1
    CHECK(make_samples(m, {0, 34}, cfg).empty());

    const WindowSample& s = samples.front();
    CHECK(s.origin_index == 31);
    CHECK(s.input(0, 0) == 0.0);
    CHECK(s.input(0, 31) == 31.0);
    CHECK(s.target[0] == 34.0);
    CHECK(s.target[1] == 134.0);
}

TEST_CASE("sample count formula holds across random configurations") {
    oracle::TestRng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t T = 2 + rng.below(10);
        const std::size_t h = 1 + rng.below(6);
        const std::size_t extra = rng.below(30);
        const std::size_t len = T + h + extra;
        SeriesMatrix m;
        m.values = Matrix(2, len + 5);
        DatasetConfig cfg;
        cfg.window_T = T;
        cfg.horizon_h = h;
        auto samples = make_samples(m, {2, 2 + len}, cfg);
        CHECK(samples.size() == len - T - h + 1);
        for (const auto& s : samples) {
            CHECK(s.origin_index >= 2 + T - 1);
            CHECK(s.origin_index + h < 2 + len);  // target stays inside the range
        }
    }
}

TEST_CASE("split ranges partition [0, L) and samples never cross boundaries") {
    SeriesMatrix m;
    m.values = Matrix(2, 257);
    DatasetConfig cfg;
    cfg.window_T = 16;
    cfg.horizon_h = 4;
    SplitRanges r = chronological_split(m, cfg);
    CHECK(r.train.begin == 0);
    CHECK(r.train.end == r.valid.begin);
    CHECK(r.valid.end == r.test.begin);
    CHECK(r.test.end == 257);
    for (const IndexRange& range : {r.train, r.valid, r.test}) {
        for (const auto& s : make_samples(m, range, cfg)) {
            CHECK(range.contains(s.origin_index - (cfg.window_T - 1)));
            CHECK(range.contains(s.origin_index + cfg.horizon_h));
        }
    }
}

}  // TEST_SUITE
