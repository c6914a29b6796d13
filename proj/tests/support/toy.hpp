#pragma once

#include <cstdint>
#include <vector>

#include "mhpp/clip.hpp"
#include "mhpp/geograph.hpp"
#include "mhpp/gsne.hpp"
#include "mhpp/rng.hpp"
#include "mhpp/text_embed.hpp"

namespace mhpp::testing {

/// Three nodes: a house 300 m from a school, a station 5 km away.
inline GeoGraph toy_graph(Rng& rng) {
    auto attrs = [&](std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) x = rng.normal();
        return v;
    };
    std::vector<GeoNode> nodes = {
        {"H0", Partition::house, attrs(4), {-37.81, 144.96}},
        {"S0", Partition::school, attrs(2), {-37.81 + 300.0 / 111195.0, 144.96}},
        {"T0", Partition::train_station, attrs(2), {-37.81 + 5000.0 / 111195.0, 144.96}},
    };
    return build_graph(std::move(nodes), GraphConfig{});
}

/// Small random GSNE parameters with identity attribute scaling and
/// biases spread so no ReLU sits near its kink by construction.
inline GsneParams toy_gsne(const GeoGraph& graph, std::uint64_t seed) {
    GsneConfig cfg;
    cfg.embedding_dim = 3;
    cfg.hidden_dim = 4;
    cfg.seed = seed;
    auto p = init_gsne(graph, cfg);
    for (auto& s : p.attribute_scaling) {
        s.mean.assign(s.mean.size(), 0.0);
        s.scale.assign(s.scale.size(), 1.0);
    }
    Rng rng(seed ^ 0x5151);
    for (auto* g : {&p.first, &p.second}) {
        for (auto& b : g->b_sigma.data()) b = rng.uniform(0.3, 1.0);
    }
    for (auto* m : p.parameters()) {
        for (auto& v : m->data()) v += rng.normal(0.0, 0.05);
    }
    return p;
}

inline GsneBatch toy_batch() {
    GsneBatch b;
    b.edges = {{0, 1, 1.0 / 300.0}, {1, 0, 1.0 / 300.0}};
    b.negatives = {{2}, {2}};
    return b;
}

/// CLIP model with toy shapes: batch 4, e = 8.
inline ClipModel toy_clip(std::uint64_t seed, std::size_t vocab_tokens = 6) {
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < vocab_tokens; ++i) tokens.push_back("t" + std::to_string(i));
    ClipConfig cfg;
    cfg.embed_dim = 8;
    cfg.grid = 1;
    cfg.tile = 2;
    cfg.image_hidden = 5;
    cfg.image_dim = 6;
    cfg.token_dim = 4;
    cfg.text_dim = 5;
    cfg.seed = seed;
    cfg.temperature = 0.5;
    return init_clip(Vocabulary(tokens), cfg);
}

inline std::vector<ClipExample> toy_clip_batch(const ClipModel& model, std::size_t b, Rng& rng) {
    std::vector<ClipExample> batch(b);
    for (auto& ex : batch) {
        ex.features.resize(model.image.w1.cols());
        for (auto& f : ex.features) f = rng.uniform();
        const std::size_t len = 2 + static_cast<std::size_t>(rng.uniform_index(4));
        for (std::size_t k = 0; k < len; ++k) {
            ex.tokens.push_back(static_cast<std::size_t>(rng.uniform_index(model.text.vocab.size())));
        }
    }
    return batch;
}

/// Relative error between an analytic gradient and central differences of
/// `loss` over every entry of `params`.
template <typename Model, typename LossFn, typename GradFn>
double gradient_check(const Model& model, LossFn loss, GradFn analytic, double h = 1e-6) {
    Model probe = model;
    auto slots = probe.parameters();
    const Vector x0 = flatten(std::span<DenseMatrix* const>(slots));
    const auto f = [&](std::span<const double> x) {
        unflatten(std::span<DenseMatrix* const>(slots), x);
        return loss(probe);
    };
    const Vector numeric = finite_diff_grad(f, x0, h);
    Model grad = analytic(model);
    auto gslots = grad.parameters();
    const Vector exact = flatten(std::span<DenseMatrix* const>(gslots));
    return relative_error(exact, numeric);
}

inline double gsne_gradient_error(std::uint64_t seed, Order order) {
    Rng rng(seed);
    const auto graph = toy_graph(rng);
    const auto params = toy_gsne(graph, seed);
    const auto batch = toy_batch();
    const auto fn = order == Order::first ? first_order_loss : second_order_loss;
    return gradient_check(
        params, [&](const GsneParams& p) { return fn(p, graph, batch).loss; },
        [&](const GsneParams& p) { return fn(p, graph, batch).gradient; });
}

inline double clip_gradient_error(std::uint64_t seed) {
    const auto model = toy_clip(seed);
    Rng rng(seed + 101);
    const auto batch = toy_clip_batch(model, 4, rng);
    return gradient_check(
        model, [&](const ClipModel& m) { return clip_batch_loss(m, batch).loss; },
        [&](const ClipModel& m) { return clip_batch_loss(m, batch).gradient; });
}

/// Checks the three gradient blocks of one skip-gram term.
inline double skipgram_gradient_error(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t vocab = 10, d = 8;
    TokenEmbeddings emb{DenseMatrix::random_normal(vocab, d, 0.5, rng), DenseMatrix::random_normal(vocab, d, 0.5, rng)};
    const SkipGramTerm term{3, 5, {1, 7, 8}};
    const auto analytic = skipgram_term_loss(emb, term);
    Vector exact = analytic.d_center;
    exact.insert(exact.end(), analytic.d_context.begin(), analytic.d_context.end());
    for (const auto& g : analytic.d_negatives) exact.insert(exact.end(), g.begin(), g.end());

    std::vector<std::pair<DenseMatrix*, std::size_t>> rows = {{&emb.input, term.center}, {&emb.context, term.context}};
    for (const auto n : term.negatives) rows.emplace_back(&emb.context, n);
    Vector x0;
    for (const auto& [m, r] : rows) x0.insert(x0.end(), m->row(r).begin(), m->row(r).end());
    const auto f = [&](std::span<const double> x) {
        TokenEmbeddings probe = emb;
        std::size_t k = 0;
        for (const auto& [m, r] : rows) {
            auto& target = m == &emb.input ? probe.input : probe.context;
            for (std::size_t c = 0; c < d; ++c) target(r, c) = x[k++];
        }
        return skipgram_term_loss(probe, term).loss;
    };
    return relative_error(exact, finite_diff_grad(f, x0, 1e-6));
}

}  // namespace mhpp::testing
