#include <cmath>
#include <map>

#include "doctest.h"
#include "mhpp/error.hpp"
#include "mhpp/geograph.hpp"

using namespace mhpp;

namespace {

constexpr double kMetersPerDegree = 111194.92664455873;  // R * pi / 180

GeoNode node_at(std::string id, Partition p, double north_m, double east_m) {
    const double lat0 = -37.8;
    return {std::move(id), p, Vector(p == Partition::house ? 2 : 1, 0.0),
            {lat0 + north_m / kMetersPerDegree,
             144.9 + east_m / (kMetersPerDegree * std::cos(lat0 * M_PI / 180.0))}};
}

}  // namespace

TEST_CASE("planar distance is symmetric and metric-scaled") {
    const GeoPosition a{-37.8, 144.9}, b{-37.8 + 1000.0 / kMetersPerDegree, 144.9};
    CHECK(planar_distance(a, b) == doctest::Approx(1000.0).epsilon(1e-9));
    CHECK(planar_distance(a, b) == planar_distance(b, a));
    CHECK(planar_distance(a, a) == 0.0);
}

TEST_CASE("edges respect the distance cutoff and the weight clamp") {
    std::vector<GeoNode> nodes = {
        node_at("h0", Partition::house, 0, 0),
        node_at("h1", Partition::house, 0, 0.25),     // 0.25 m: clamped weight
        node_at("s0", Partition::school, 400, 0),
        node_at("t0", Partition::train_station, 0, 999.0),
        node_at("r0", Partition::region, 0, 1001.0),
    };
    const auto g = build_graph(nodes, GraphConfig{1000.0, 1.0, false});
    CHECK(g.adjacent(0, 1));
    CHECK(g.adjacent(0, 2));
    CHECK(g.adjacent(0, 3));
    CHECK_FALSE(g.adjacent(0, 4));
    CHECK(g.adjacent(3, 4));  // 2 m apart
    for (const auto& e : g.edges()) {
        CHECK(e.source < e.target);
        CHECK(e.distance < 1000.0);
        CHECK(e.weight == doctest::Approx(1.0 / std::max(e.distance, 1.0)));
    }
    const auto n0 = g.neighbors(0);
    CHECK(n0.size() == 3);
    CHECK(n0[0].node == 1);
    CHECK(n0[0].weight == 1.0);
    CHECK(g.find("s0") == std::optional<std::size_t>{2});
    CHECK_FALSE(g.find("nope"));
    CHECK(g.partition_nodes(Partition::house) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("cross-partition mode drops same-partition edges") {
    std::vector<GeoNode> nodes = {node_at("h0", Partition::house, 0, 0), node_at("h1", Partition::house, 0, 10),
                                  node_at("s0", Partition::school, 0, 20)};
    const auto g = build_graph(nodes, GraphConfig{1000.0, 1.0, true});
    CHECK_FALSE(g.adjacent(0, 1));
    CHECK(g.adjacent(0, 2));
    CHECK(g.adjacent(1, 2));
}

TEST_CASE("graph from a corpus places houses first and partitions POIs") {
    const auto corpus = synth_generate(40, 9, 6);
    const auto g = build_graph(corpus.listings, corpus.pois);
    REQUIRE(g.node_count() == 49);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(g.node(i).partition == Partition::house);
        CHECK(g.node(i).attributes.size() == kRawFeatureCount);
        CHECK(g.node(i).id == corpus.listings[i].id);
    }
    for (std::size_t i = 40; i < 49; ++i) {
        const auto& p = corpus.pois[i - 40];
        CHECK(g.node(i).partition == partition_of(p.kind));
        CHECK(g.node(i).attributes == p.attributes);
    }
    CHECK(g.edge_count() > 0);
}

TEST_CASE("edge sampler draws edges in proportion to weight") {
    std::vector<GeoNode> nodes = {node_at("a", Partition::house, 0, 0), node_at("b", Partition::school, 0, 1),
                                  node_at("c", Partition::region, 0, 4)};
    const auto g = build_graph(nodes, GraphConfig{1000.0, 1.0, false});
    REQUIRE(g.edge_count() == 3);  // weights 1, 1/4, 1/3
    EdgeSampler sampler(g);
    Rng rng(3);
    std::map<std::pair<std::size_t, std::size_t>, int> counts;
    int forward = 0;
    const int draws = 120000;
    for (const auto& e : sampler.sample(draws, rng)) {
        counts[{std::min(e.source, e.target), std::max(e.source, e.target)}]++;
        if (e.source < e.target) ++forward;
        CHECK(g.adjacent(e.source, e.target));
    }
    const double total = 1.0 + 0.25 + 1.0 / 3.0;
    CHECK(counts[{0, 1}] / double(draws) == doctest::Approx(1.0 / total).epsilon(0.02));
    CHECK(counts[{0, 2}] / double(draws) == doctest::Approx(0.25 / total).epsilon(0.03));
    CHECK(counts[{1, 2}] / double(draws) == doctest::Approx((1.0 / 3.0) / total).epsilon(0.03));
    CHECK(forward / double(draws) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("negative samples are distinct, non-adjacent and not the source") {
    const auto corpus = synth_generate(80, 12, 8);
    const auto g = build_graph(corpus.listings, corpus.pois);
    Rng rng(4);
    for (std::size_t s = 0; s < g.node_count(); s += 7) {
        const auto neg = sample_negatives(g, s, 4, rng);
        CHECK(neg.size() == 4);
        for (std::size_t i = 0; i < neg.size(); ++i) {
            CHECK(neg[i] != s);
            CHECK_FALSE(g.adjacent(s, neg[i]));
            for (std::size_t j = 0; j < i; ++j) CHECK(neg[i] != neg[j]);
        }
    }
    std::vector<GeoNode> pair = {node_at("a", Partition::house, 0, 0), node_at("b", Partition::school, 0, 1)};
    const auto tiny = build_graph(pair, GraphConfig{});
    CHECK_THROWS_AS(sample_negatives(tiny, 0, 1, rng), DomainError);
}
