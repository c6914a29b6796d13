#include <cmath>

#include "doctest.h"
#include "mhpp/error.hpp"
#include "mhpp/gsne.hpp"
#include "toy.hpp"

using namespace mhpp;

TEST_CASE("kl divergence closed form on a hand example") {
    const GaussianEmbedding a{{0.0, 1.0}, {1.0, 2.0}}, b{{1.0, 1.0}, {2.0, 2.0}};
    // Per dimension: 0.5 (s_a^2/s_b^2 + (mu_b-mu_a)^2/s_b^2 - 1 + 2 ln(s_b/s_a))
    const double d0 = 0.5 * (0.25 + 0.25 - 1.0 + 2.0 * std::log(2.0));
    CHECK(kl_divergence(a, b) == doctest::Approx(d0).epsilon(1e-14));
    CHECK(kl_divergence(a, a) == 0.0);
    CHECK(kl_divergence(a, b) != doctest::Approx(kl_divergence(b, a)));
    const GaussianEmbedding c{{0.0}, {1.0}};
    CHECK_THROWS_AS(kl_divergence(a, c), ShapeError);
}

TEST_CASE("sigma is at least one for arbitrary encoder weights") {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        GaussianEncoder enc{DenseMatrix::random_normal(3, 4, 3.0, rng), DenseMatrix::random_normal(3, 1, 3.0, rng),
                            DenseMatrix::random_normal(3, 4, 3.0, rng), DenseMatrix::random_normal(3, 1, 3.0, rng)};
        const Vector u = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        const auto g = gaussian_encode(enc, u);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(g.sigma[k] >= 1.0);
            CHECK(g.mu[k] >= 0.0);
        }
    }
}

TEST_CASE("first and second order gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        CHECK(testing::gsne_gradient_error(seed, Order::first) <= 1e-4);
        CHECK(testing::gsne_gradient_error(seed, Order::second) <= 1e-4);
    }
}

TEST_CASE("second-order loss encodes sources with the second pipeline") {
    Rng rng(3);
    const auto graph = testing::toy_graph(rng);
    auto p = testing::toy_gsne(graph, 3);
    const auto batch = testing::toy_batch();
    const double before = second_order_loss(p, graph, batch).loss;
    const double first_before = first_order_loss(p, graph, batch).loss;
    p.second.b_mu(0, 0) += 0.7;
    CHECK(second_order_loss(p, graph, batch).loss != before);
    CHECK(first_order_loss(p, graph, batch).loss == first_before);
}

TEST_CASE("training reduces the loss and is reproducible") {
    const auto corpus = synth_generate(150, 20, 5);
    const auto graph = build_graph(corpus.listings, corpus.pois);
    GsneConfig cfg;
    cfg.epochs = 6;
    cfg.seed = 11;
    GsneTrainingLog log;
    const auto a = train_gsne(graph, cfg, &log);
    REQUIRE(log.epoch_loss.size() == 6);
    CHECK(log.epoch_loss.back() < log.epoch_loss.front());
    const auto b = train_gsne(graph, cfg);
    CHECK(gsne_to_json(a).dump() == gsne_to_json(b).dump());
}

TEST_CASE("geo embeddings have the documented layout") {
    const auto corpus = synth_generate(60, 10, 2);
    const auto graph = build_graph(corpus.listings, corpus.pois);
    GsneConfig cfg;
    cfg.epochs = 1;
    auto p = train_gsne(graph, cfg);
    const auto& h = corpus.listings[3];
    const auto g = embed_geo(p, graph, h.id);
    REQUIRE(g.size() == 2 * cfg.embedding_dim);
    CHECK(g == embed_geo_attributes(p, h.raw_features));
    const auto first = encode_node(p, Partition::house, h.raw_features, Order::first);
    for (std::size_t k = 0; k < cfg.embedding_dim; ++k) CHECK(g[k] == first.mu[k]);

    p.append_sigma = true;
    const auto wide = embed_geo_attributes(p, h.raw_features);
    REQUIRE(wide.size() == 4 * cfg.embedding_dim);
    for (std::size_t k = 2 * cfg.embedding_dim; k < wide.size(); ++k) CHECK(wide[k] >= 1.0);
    CHECK_THROWS(embed_geo(p, graph, "missing-id"));
}

TEST_CASE("gsne weights round trip bit-exactly through json") {
    Rng rng(9);
    const auto graph = testing::toy_graph(rng);
    const auto p = testing::toy_gsne(graph, 9);
    const auto j = gsne_to_json(p);
    const auto q = gsne_from_json(Json::parse(j.dump()));
    const auto a = p.parameters();
    const auto b = q.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
    CHECK(q.attribute_scaling[0].mean == p.attribute_scaling[0].mean);
    auto bad = j;
    bad["kind"] = "clip";
    CHECK_THROWS_AS(gsne_from_json(bad), FormatError);
}
