#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mhpp/error.hpp"
#include "mhpp/fusion.hpp"

using namespace mhpp;

namespace {

ListingStreams make_streams(double base) {
    const std::size_t lengths[kStreamCount] = {43, 16, 16, 128, 256};
    ListingStreams s;
    for (std::size_t k = 0; k < kStreamCount; ++k) {
        Vector v(lengths[k]);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = base + 1000.0 * k + i;
        s[k] = std::move(v);
    }
    return s;
}

}  // namespace

TEST_CASE("full fusion has the default length and stream offsets") {
    const StreamMask all{Stream::raw, Stream::geo_first, Stream::geo_second, Stream::text, Stream::image};
    const auto f = fuse(make_streams(0), all);
    CHECK(f.values.size() == 459);
    REQUIRE(f.layout.size() == 5);
    const std::size_t offsets[5] = {0, 43, 59, 75, 203};
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(f.layout[k].offset == offsets[k]);
        CHECK(f.layout[k].stream == static_cast<Stream>(k));
    }
    CHECK(f.values[203] == 4000.0);
}

TEST_CASE("masks select streams in fusion order") {
    const auto s = make_streams(0);
    const auto raw = fuse(s, StreamMask{Stream::raw});
    CHECK(raw.values == *s[0]);
    const auto ti = fuse(s, StreamMask{Stream::image, Stream::raw});
    CHECK(ti.values.size() == 43 + 256);
    CHECK(ti.layout[1].stream == Stream::image);
    CHECK(ti.layout[1].offset == 43);
    CHECK_THROWS_AS(fuse(s, StreamMask{}), DomainError);
    auto missing = s;
    missing[3].reset();
    CHECK_THROWS(fuse(missing, StreamMask{Stream::text}));
}

TEST_CASE("fusion is injective across distinct stream vectors") {
    const StreamMask all{Stream::raw, Stream::geo_first, Stream::geo_second, Stream::text, Stream::image};
    const auto a = make_streams(0);
    auto b = a;
    (*b[2])[5] += 1e-9;
    CHECK(fuse(a, all).values != fuse(b, all).values);
}

TEST_CASE("fused dataset standardizes with train statistics only") {
    std::vector<ListingStreams> rows;
    Rng rng(1);
    for (int i = 0; i < 30; ++i) {
        auto s = make_streams(rng.normal(0, 5));
        (*s[3])[0] = rng.normal(2, 3);
        rows.push_back(std::move(s));
    }
    SplitIndices split;
    for (std::size_t i = 0; i < 30; ++i) (i % 3 == 0 ? split.test : split.train).push_back(i);
    const StreamMask mask{Stream::raw, Stream::text};
    const auto ds = fuse_dataset(rows, split, mask);
    CHECK(ds.train.rows() == 20);
    CHECK(ds.test.rows() == 10);
    CHECK(ds.train.cols() == 43 + 128);
    for (std::size_t c = 0; c < ds.train.cols(); ++c) {
        double m = 0;
        for (std::size_t r = 0; r < ds.train.rows(); ++r) m += ds.train(r, c);
        CHECK(std::abs(m / 20.0) <= 1e-9);
    }
    double test_mean = 0;
    for (std::size_t r = 0; r < 10; ++r) test_mean += ds.test(r, 43);
    CHECK(std::abs(test_mean / 10.0) > 1e-6);  // test rows are not re-centred
    const auto names = fused_column_names(ds.layout);
    CHECK(names.front() == "raw:0");
    CHECK(names[43] == "text:0");
    CHECK(names.size() == ds.train.cols());
}

TEST_CASE("rows with inconsistent stream lengths are rejected") {
    std::vector<ListingStreams> rows = {make_streams(0), make_streams(1)};
    rows[1][0]->pop_back();
    CHECK_THROWS_AS(fuse_rows(rows, StreamMask{Stream::raw}), ShapeError);
}

TEST_CASE("fused csv round trips") {
    FusedTable t;
    t.ids = {"a", "b"};
    t.splits = {"train", "test"};
    t.targets = {13.1, 12.9};
    t.columns = {"raw:0", "text:0"};
    t.values = DenseMatrix(2, 2, std::vector<double>{0.1, 1.0 / 3.0, -2.0, 1e-17});
    const auto path = std::filesystem::temp_directory_path() / "mhpp-test-fused.csv";
    save_fused_csv(path, t, "prov");
    const auto back = load_fused_csv(path);
    CHECK(back.ids == t.ids);
    CHECK(back.splits == t.splits);
    CHECK(back.targets == t.targets);
    CHECK(back.columns == t.columns);
    CHECK(back.values == t.values);
    std::filesystem::remove(path);
}

TEST_CASE("stream names round trip") {
    for (std::size_t k = 0; k < kStreamCount; ++k) {
        const auto s = static_cast<Stream>(k);
        CHECK(stream_from_string(to_string(s)) == s);
    }
    CHECK_THROWS(stream_from_string("audio"));
}
