#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mhpp/csv.hpp"
#include "mhpp/dataset.hpp"
#include "mhpp/error.hpp"

using namespace mhpp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("mhpp-test-dataset-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("csv reader handles quotes, embedded newlines and comments") {
    std::istringstream in("# comment\na,\"b,c\",\"say \"\"hi\"\"\"\n\"multi\nline\",2,\n");
    csv::Reader r(in);
    auto a = r.next();
    REQUIRE(a);
    CHECK(a->fields == std::vector<std::string>{"a", "b,c", "say \"hi\""});
    CHECK(a->line == 2);
    auto b = r.next();
    REQUIRE(b);
    CHECK(b->fields == std::vector<std::string>{"multi\nline", "2", ""});
    CHECK_FALSE(r.next());
}

TEST_CASE("csv writer quotes only when needed and round trips") {
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("q\"") == "\"q\"\"\"");
    std::ostringstream out;
    const std::vector<std::string> row = {"x", "y,z", "line\nbreak", ""};
    csv::write_row(out, row);
    std::istringstream in(out.str());
    csv::Reader r(in);
    CHECK(r.next()->fields == row);
}

TEST_CASE("format_double is shortest round trip and parse_double is strict") {
    for (const double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 13.3}) {
        CHECK(*csv::parse_double(csv::format_double(v)) == v);
    }
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK_FALSE(csv::parse_double(""));
    CHECK_FALSE(csv::parse_double("1.5x"));
    CHECK(*csv::parse_double(" 2.5 ") == 2.5);
}

TEST_CASE("ppm encode and decode round trip with comments") {
    RasterImage img(3, 2);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 13);
    const auto bytes = encode_ppm(img, "made by a test");
    CHECK(bytes.rfind("P6\n# made by a test\n", 0) == 0);
    CHECK(decode_ppm(bytes) == img);
}

TEST_CASE("ppm decoder rejects malformed input") {
    RasterImage img(2, 2);
    const auto good = encode_ppm(img);
    CHECK_THROWS_AS(decode_ppm("P3\n2 2\n255\n"), FormatError);
    CHECK_THROWS_AS(decode_ppm("P6\n2 2\n65535\n"), FormatError);
    CHECK_THROWS_AS(decode_ppm(good.substr(0, good.size() - 1)), FormatError);
    CHECK_THROWS_AS(decode_ppm("JUNK"), FormatError);
    CHECK_THROWS_AS(decode_ppm("P6\n2\n"), FormatError);
}

TEST_CASE("collage tiles five images and repeats the first when short") {
    RasterImage red(4, 4), blue(2, 2);
    for (std::size_t i = 0; i < red.pixels.size(); i += 3) red.pixels[i] = 255;
    for (std::size_t i = 2; i < blue.pixels.size(); i += 3) blue.pixels[i] = 255;
    const std::vector<RasterImage> two = {red, blue};
    const auto c = make_collage(two, 3);
    CHECK(c.width == 15);
    CHECK(c.height == 3);
    CHECK(c.at(0, 0)[0] == 255);   // red
    CHECK(c.at(4, 1)[2] == 255);   // blue
    for (std::size_t t = 2; t < 5; ++t) CHECK(c.at(3 * t + 1, 1)[0] == 255);
    CHECK_THROWS_AS(make_collage(std::vector<RasterImage>{}, 3), DomainError);
}

TEST_CASE("synthetic corpus is deterministic and well formed") {
    const auto a = synth_generate(120, 12, 9);
    const auto b = synth_generate(120, 12, 9);
    const auto c = synth_generate(120, 12, 10);
    REQUIRE(a.listings.size() == 120);
    REQUIRE(a.pois.size() == 12);
    CHECK(a.truth.size() == 120);
    for (std::size_t i = 0; i < a.listings.size(); ++i) {
        const auto& l = a.listings[i];
        CHECK(l.id == b.listings[i].id);
        CHECK(l.raw_features == b.listings[i].raw_features);
        CHECK(l.description == b.listings[i].description);
        CHECK(l.images == b.listings[i].images);
        CHECK(l.log_price == doctest::Approx(std::log(l.price)));
        CHECK(l.images.size() >= 1);
        CHECK(l.images.size() <= kCollageTiles);
        CHECK(l.raw_features[feature::kLatitude] == l.latitude);
        CHECK(l.raw_features[feature::kLongitude] == l.longitude);
    }
    CHECK(a.listings[0].raw_features != c.listings[0].raw_features);
    std::set<PoiKind> kinds;
    for (const auto& p : a.pois) {
        kinds.insert(p.kind);
        CHECK(p.attributes.size() == poi_attribute_count(p.kind));
    }
    CHECK(kinds.size() == 3);
}

TEST_CASE("listing and poi files round trip") {
    const auto dir = scratch("roundtrip");
    const auto corpus = synth_generate(25, 6, 3);
    save_listings(dir / "listings.csv", corpus.listings, "images", "provenance line");
    save_pois(dir / "pois.csv", corpus.pois);
    CHECK(read_all(dir / "listings.csv").rfind("# provenance line\n", 0) == 0);
    const auto loaded = load_listings(dir / "listings.csv");
    CHECK(loaded.rejected.empty());
    REQUIRE(loaded.listings.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) {
        const auto& x = loaded.listings[i];
        const auto& y = corpus.listings[i];
        CHECK(x.id == y.id);
        CHECK(x.raw_features == y.raw_features);
        CHECK(x.price == y.price);
        CHECK(x.description == y.description);
        CHECK(x.images == y.images);
    }
    const auto pois = load_pois(dir / "pois.csv");
    REQUIRE(pois.size() == 6);
    CHECK(pois[2].attributes == corpus.pois[2].attributes);
    CHECK(pois[2].kind == corpus.pois[2].kind);
    fs::remove_all(dir);
}

TEST_CASE("bad listing rows are rejected with their line, good rows kept") {
    const auto dir = scratch("reject");
    const auto corpus = synth_generate(10, 3, 4);
    save_listings(dir / "listings.csv", corpus.listings);
    std::vector<std::vector<std::string>> rows;
    {
        std::ifstream in(dir / "listings.csv", std::ios::binary);
        csv::Reader r(in);
        while (auto rec = r.next()) rows.push_back(rec->fields);
    }
    REQUIRE(rows.size() == 11);
    rows[2][3] = "-5";  // line 3
    rows.push_back({"short", "row"});
    {
        std::ofstream out(dir / "listings.csv", std::ios::binary);
        for (const auto& r : rows) csv::write_row(out, r);
    }

    const auto loaded = load_listings(dir / "listings.csv");
    CHECK(loaded.listings.size() == 9);
    REQUIRE(loaded.rejected.size() == 2);
    CHECK(loaded.rejected[0].line == 3);
    CHECK(loaded.rejected[0].message.find("price") != std::string::npos);
    CHECK(loaded.rejected[1].line == 12);

    std::ofstream hdr(dir / "bad_header.csv");
    hdr << "id,lat\n";
    hdr.close();
    CHECK_THROWS_AS(load_listings(dir / "bad_header.csv"), FormatError);
    fs::remove_all(dir);
}

TEST_CASE("stratified split is deterministic, disjoint and balanced per stratum") {
    const auto corpus = synth_generate(500, 10, 2);
    const auto s = stratified_split(corpus.listings, 0.7, 10, 77);
    const auto t = stratified_split(corpus.listings, 0.7, 10, 77);
    CHECK(s.train == t.train);
    CHECK(s.test == t.test);
    CHECK(s.train.size() + s.test.size() == 500);
    CHECK(s.train.size() == 350);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    std::vector<std::size_t> all;
    std::merge(s.train.begin(), s.train.end(), s.test.begin(), s.test.end(), std::back_inserter(all));
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);

    // Both halves see prices from the whole range.
    auto price_range = [&](const std::vector<std::size_t>& idx) {
        double lo = 1e300, hi = -1e300;
        for (const auto i : idx) {
            lo = std::min(lo, corpus.listings[i].log_price);
            hi = std::max(hi, corpus.listings[i].log_price);
        }
        return hi - lo;
    };
    CHECK(price_range(s.test) > 0.8 * price_range(s.train));
    CHECK(stratified_split(corpus.listings, 0.7, 10, 78).train != s.train);
    CHECK_THROWS_AS(stratified_split(corpus.listings, 1.0, 10, 1), DomainError);
}
