#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mhpp/dataset.hpp"
#include "mhpp/error.hpp"
#include "mhpp/text_embed.hpp"
#include "toy.hpp"

using namespace mhpp;

namespace {

std::vector<std::string> corpus_descriptions(std::size_t n, std::uint64_t seed) {
    const auto c = synth_generate(n, 10, seed);
    std::vector<std::string> out;
    for (const auto& l : c.listings) out.push_back(l.description);
    return out;
}

double cosine(std::span<const double> a, std::span<const double> b) { return dot(a, b) / (norm2(a) * norm2(b)); }

}  // namespace

TEST_CASE("tokenize lowercases, splits on punctuation and prepends CLS") {
    using V = std::vector<std::string>;
    const std::string cls(kClsToken);
    CHECK(tokenize("Spacious 3-bedroom home!") == V{cls, "spacious", "3", "bedroom", "home"});
    CHECK(tokenize("") == V{cls});
    CHECK(tokenize("A-a a") == V{cls, "a", "a", "a"});
    CHECK(tokenize("  ,,, ") == V{cls});
}

TEST_CASE("vocabulary orders by frequency then lexicographically") {
    const std::vector<std::string> docs = {"beta alpha gamma", "beta alpha", "beta delta", "zeta"};
    const auto v = build_vocab(docs, 1);
    CHECK(v.token(Vocabulary::cls) == std::string(kClsToken));
    CHECK(v.token(Vocabulary::unk) == std::string(kUnkToken));
    CHECK(v.token(2) == "beta");
    CHECK(v.token(3) == "alpha");
    CHECK(v.token(4) == "delta");  // ties: delta < gamma < zeta
    CHECK(v.token(5) == "gamma");
    CHECK(v.token(6) == "zeta");
    CHECK(v.size() == 7);

    const auto pruned = build_vocab(docs, 2);
    CHECK(pruned.size() == 4);
    CHECK(pruned.index_of("gamma") == Vocabulary::unk);
    CHECK(pruned.index_of("never-seen") == Vocabulary::unk);
    const auto ids = pruned.encode(tokenize("Gamma beta"));
    CHECK(ids == std::vector<std::size_t>{Vocabulary::cls, Vocabulary::unk, pruned.index_of("beta")});
    CHECK_THROWS_AS(Vocabulary({"x", "x"}), DomainError);
}

TEST_CASE("pooling strategies on a hand example") {
    const DenseMatrix table(3, 2, std::vector<double>{1, -1, 3, 5, -2, 0});
    const std::vector<std::size_t> ids = {0, 2, 1, 1};
    CHECK(pool_embed(table, ids, Pooling::cls) == Vector{1, -1});
    CHECK(pool_embed(table, ids, Pooling::max) == Vector{3, 5});
    const auto m = pool_embed(table, ids, Pooling::mean);
    CHECK(m[0] == doctest::Approx(5.0 / 4.0));
    CHECK(m[1] == doctest::Approx(9.0 / 4.0));
    CHECK_THROWS_AS(pool_embed(table, std::vector<std::size_t>{}, Pooling::mean), DomainError);
    CHECK_THROWS_AS(pool_embed(table, std::vector<std::size_t>{3}, Pooling::mean), ShapeError);
    CHECK(pooling_from_string("max") == Pooling::max);
    CHECK_THROWS_AS(pooling_from_string("sum"), DomainError);
}

TEST_CASE("skip-gram term gradient matches finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) CHECK(testing::skipgram_gradient_error(seed) <= 1e-4);
}

TEST_CASE("skip-gram training lowers the loss and relates quality words") {
    const auto docs = corpus_descriptions(1500, 3);
    const auto vocab = build_vocab(docs, 2);
    SkipGramConfig cfg;
    cfg.dim = 64;
    cfg.epochs = 5;
    cfg.seed = 4;
    SkipGramLog log;
    const auto emb = train_token_embeddings(docs, vocab, cfg, &log);
    REQUIRE(log.epoch_loss.size() == 5);
    CHECK(log.epoch_loss.back() < log.epoch_loss.front());

    const auto lux = emb.input.row(vocab.index_of("luxury"));
    const auto pre = emb.input.row(vocab.index_of("premium"));
    REQUIRE(vocab.index_of("luxury") != Vocabulary::unk);
    REQUIRE(vocab.index_of("premium") != Vocabulary::unk);
    Rng rng(5);
    double mean_random = 0.0;
    for (int i = 0; i < 100; ++i) {
        const auto t = 2 + rng.uniform_index(vocab.size() - 2);
        mean_random += cosine(lux, emb.input.row(t)) / 100.0;
    }
    CHECK(cosine(lux, pre) > mean_random);

    const auto again = train_token_embeddings(docs, vocab, cfg);
    CHECK(again.input == emb.input);
}

TEST_CASE("text model defaults to 128 dimensions and is train-fitted") {
    const auto docs = corpus_descriptions(300, 8);
    TextEmbedConfig cfg;
    cfg.skipgram.epochs = 1;
    const auto model = fit_text_model(docs, cfg);
    CHECK(model.output_dim() == 128);
    CHECK(model.table.cols() == 256);
    CHECK(embed_text(model, docs[0]).size() == 128);
    CHECK(text_vector_full(model, docs[0]).size() == 256);
    // Unseen words fall back to UNK rather than failing.
    CHECK(embed_text(model, "zzzqqq unseen words").size() == 128);

    auto too_wide = cfg;
    too_wide.output_dim = 300;
    CHECK_THROWS_AS(fit_text_model(docs, too_wide), DomainError);
}

TEST_CASE("full-width text pca is a rotation") {
    const auto docs = corpus_descriptions(300, 9);
    TextEmbedConfig cfg;
    cfg.skipgram.dim = 32;
    cfg.skipgram.epochs = 1;
    cfg.output_dim = 32;
    const auto model = fit_text_model(docs, cfg);
    for (std::size_t i = 0; i + 1 < 10; ++i) {
        const auto a = text_vector_full(model, docs[i]), b = text_vector_full(model, docs[i + 1]);
        const auto pa = embed_text(model, docs[i]), pb = embed_text(model, docs[i + 1]);
        double d0 = 0, d1 = 0;
        for (std::size_t k = 0; k < 32; ++k) {
            d0 += (a[k] - b[k]) * (a[k] - b[k]);
            d1 += (pa[k] - pb[k]) * (pa[k] - pb[k]);
        }
        CHECK(std::abs(std::sqrt(d0) - std::sqrt(d1)) < 1e-8);
    }
}

TEST_CASE("text model round trips through json and the token table dump") {
    const auto docs = corpus_descriptions(120, 2);
    TextEmbedConfig cfg;
    cfg.skipgram.dim = 16;
    cfg.skipgram.epochs = 1;
    cfg.output_dim = 8;
    const auto model = fit_text_model(docs, cfg);
    const auto back = text_model_from_json(Json::parse(text_model_to_json(model).dump()));
    CHECK(back.vocab == model.vocab);
    CHECK(back.table == model.table);
    CHECK(embed_text(back, docs[5]) == embed_text(model, docs[5]));

    const auto path = std::filesystem::temp_directory_path() / "mhpp-test-tokens.txt";
    save_embedding_table(path, model.vocab, model.table);
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind(std::string(kClsToken) + " ", 0) == 0);
    std::size_t lines = 1;
    for (std::string l; std::getline(in, l);) ++lines;
    CHECK(lines == model.vocab.size());
    std::filesystem::remove(path);
}
