#include "mhpp/text_embed.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include "mhpp/csv.hpp"
#include "mhpp/error.hpp"

namespace mhpp {
namespace {

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// -ln s(x), stable for large |x|.
double neg_log_logistic(double x) { return std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

/// Table for drawing negatives with probability proportional to count^0.75.
class UnigramSampler {
public:
    explicit UnigramSampler(std::span<const double> counts) {
        cumulative_.reserve(counts.size());
        double total = 0.0;
        for (double c : counts) {
            total += c > 0.0 ? std::pow(c, 0.75) : 0.0;
            cumulative_.push_back(total);
        }
        if (total <= 0.0) throw DomainError("skip-gram: empty unigram distribution");
        total_ = total;
    }

    std::size_t sample(Rng& rng) const {
        const double u = rng.uniform() * total_;
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        return static_cast<std::size_t>(it - cumulative_.begin());
    }

private:
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out{std::string(kClsToken)};
    std::string current;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
    tokens_.reserve(tokens.size() + 2);
    tokens_.emplace_back(kClsToken);
    tokens_.emplace_back(kUnkToken);
    for (auto& t : tokens) tokens_.push_back(std::move(t));
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        if (!index_.emplace(tokens_[i], i).second) {
            throw DomainError("vocabulary: duplicate token '" + tokens_[i] + "'");
        }
    }
}

std::size_t Vocabulary::index_of(std::string_view token) const {
    const auto it = index_.find(std::string(token));
    return it == index_.end() ? unk : it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(index_of(t));
    return ids;
}

Vocabulary build_vocab(std::span<const std::string> descriptions, std::size_t min_count) {
    if (min_count < 1) throw DomainError("build_vocab: min_count must be at least 1");
    std::map<std::string, std::size_t> counts;
    for (const auto& d : descriptions) {
        const auto tokens = tokenize(d);
        for (std::size_t i = 1; i < tokens.size(); ++i) ++counts[tokens[i]];
    }
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [token, count] : counts) {
        if (count >= min_count && token != kClsToken && token != kUnkToken) kept.emplace_back(token, count);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> tokens;
    tokens.reserve(kept.size());
    for (auto& [token, count] : kept) tokens.push_back(std::move(token));
    return Vocabulary(std::move(tokens));
}

SkipGramTermLoss skipgram_term_loss(const TokenEmbeddings& embeddings, const SkipGramTerm& term) {
    const auto d = embeddings.dim();
    const auto u = embeddings.input.row(term.center);
    SkipGramTermLoss out;
    out.d_center.assign(d, 0.0);

    auto apply = [&](std::size_t ctx, double sign, Vector& d_ctx) {
        const auto v = embeddings.context.row(ctx);
        const double score = sign * dot(u, v);
        out.loss += neg_log_logistic(score);
        const double g = -sign * logistic(-score);
        d_ctx.assign(d, 0.0);
        for (std::size_t k = 0; k < d; ++k) {
            out.d_center[k] += g * v[k];
            d_ctx[k] = g * u[k];
        }
    };

    apply(term.context, 1.0, out.d_context);
    out.d_negatives.resize(term.negatives.size());
    for (std::size_t n = 0; n < term.negatives.size(); ++n) apply(term.negatives[n], -1.0, out.d_negatives[n]);
    return out;
}

TokenEmbeddings train_token_embeddings(std::span<const std::string> descriptions, const Vocabulary& vocab,
                                       const SkipGramConfig& config, SkipGramLog* log) {
    if (vocab.size() <= 2) throw DomainError("train_token_embeddings: vocabulary has no ordinary tokens");
    if (config.dim == 0 || config.window == 0 || config.epochs == 0) {
        throw DomainError("train_token_embeddings: dim, window and epochs must be positive");
    }
    std::vector<std::vector<std::size_t>> corpus;
    corpus.reserve(descriptions.size());
    std::vector<double> counts(vocab.size(), 0.0);
    std::size_t total_tokens = 0;
    for (const auto& d : descriptions) {
        const auto tokens = tokenize(d);
        auto ids = vocab.encode(tokens);
        for (const auto id : ids) counts[id] += 1.0;
        total_tokens += ids.size();
        if (ids.size() >= 2) corpus.push_back(std::move(ids));
    }
    if (corpus.empty()) throw DomainError("train_token_embeddings: corpus has no (center, context) pairs");

    const UnigramSampler sampler(counts);
    Rng rng(derive_seed(config.seed, "skipgram"));
    const std::size_t V = vocab.size();
    const std::size_t d = config.dim;
    TokenEmbeddings emb{DenseMatrix(V, d), DenseMatrix(V, d)};
    const double init = 0.5 / static_cast<double>(d);
    for (auto& x : emb.input.data()) x = rng.uniform(-init, init);

    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const double planned = static_cast<double>(config.epochs) * static_cast<double>(total_tokens);
    double processed = 0.0;
    const double lr_floor = config.learning_rate * 1e-4;
    SkipGramTerm term;
    term.negatives.resize(config.negatives);
    Vector d_center(d);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        std::size_t terms = 0;
        for (const auto doc : order) {
            const auto& ids = corpus[doc];
            for (std::size_t i = 0; i < ids.size(); ++i) {
                const double lr =
                    std::max(lr_floor, config.learning_rate * (1.0 - processed / planned));
                processed += 1.0;
                const auto reach = static_cast<std::size_t>(1 + rng.uniform_index(config.window));
                const std::size_t lo = i >= reach ? i - reach : 0;
                const std::size_t hi = std::min(ids.size() - 1, i + reach);
                for (std::size_t j = lo; j <= hi; ++j) {
                    if (j == i) continue;
                    term.center = ids[i];
                    term.context = ids[j];
                    for (auto& n : term.negatives) n = sampler.sample(rng);
                    // In-place SGD, equivalent to applying skipgram_term_loss's gradient.
                    auto u = emb.input.row(term.center);
                    std::fill(d_center.begin(), d_center.end(), 0.0);
                    auto update = [&](std::size_t ctx, double sign) {
                        auto v = emb.context.row(ctx);
                        const double score = sign * dot(u, v);
                        loss_sum += neg_log_logistic(score);
                        const double g = -sign * logistic(-score);
                        for (std::size_t k = 0; k < d; ++k) {
                            d_center[k] += g * v[k];
                            v[k] -= lr * g * u[k];
                        }
                    };
                    update(term.context, 1.0);
                    for (const auto n : term.negatives) {
                        if (n != term.context) update(n, -1.0);
                    }
                    for (std::size_t k = 0; k < d; ++k) u[k] -= lr * d_center[k];
                    ++terms;
                }
            }
        }
        if (log) log->epoch_loss.push_back(terms ? loss_sum / static_cast<double>(terms) : 0.0);
    }
    return emb;
}

std::string_view to_string(Pooling p) {
    switch (p) {
        case Pooling::cls: return "cls";
        case Pooling::mean: return "mean";
        case Pooling::max: return "max";
    }
    return "?";
}

Pooling pooling_from_string(std::string_view s) {
    if (s == "cls") return Pooling::cls;
    if (s == "mean") return Pooling::mean;
    if (s == "max") return Pooling::max;
    throw DomainError("unknown pooling strategy '" + std::string(s) + "' (expected cls, mean or max)");
}

Vector pool_embed(const DenseMatrix& table, std::span<const std::size_t> token_ids, Pooling strategy) {
    if (token_ids.empty()) throw DomainError("pool_embed: no tokens");
    for (const auto id : token_ids) {
        if (id >= table.rows()) throw ShapeError("pool_embed: token id out of range");
    }
    const auto row0 = table.row(token_ids.front());
    Vector out(row0.begin(), row0.end());
    switch (strategy) {
        case Pooling::cls:
            break;
        case Pooling::mean:
            for (std::size_t t = 1; t < token_ids.size(); ++t) {
                const auto r = table.row(token_ids[t]);
                for (std::size_t k = 0; k < out.size(); ++k) out[k] += r[k];
            }
            for (auto& x : out) x /= static_cast<double>(token_ids.size());
            break;
        case Pooling::max:
            for (std::size_t t = 1; t < token_ids.size(); ++t) {
                const auto r = table.row(token_ids[t]);
                for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::max(out[k], r[k]);
            }
            break;
    }
    return out;
}

TextModel fit_text_model(std::span<const std::string> train_descriptions, const TextEmbedConfig& config,
                         SkipGramLog* log) {
    if (config.output_dim > config.skipgram.dim) {
        throw DomainError("text embedding: output dimension " + std::to_string(config.output_dim) +
                          " exceeds token dimension " + std::to_string(config.skipgram.dim));
    }
    TextModel model;
    model.vocab = build_vocab(train_descriptions, config.min_count);
    model.table = train_token_embeddings(train_descriptions, model.vocab, config.skipgram, log).input;
    model.pooling = config.pooling;
    DenseMatrix full(train_descriptions.size(), config.skipgram.dim);
    for (std::size_t i = 0; i < train_descriptions.size(); ++i) {
        const auto v = text_vector_full(model, train_descriptions[i]);
        std::copy(v.begin(), v.end(), full.row(i).begin());
    }
    model.pca = pca_fit(full, config.output_dim);
    return model;
}

Vector text_vector_full(const TextModel& model, std::string_view description) {
    const auto tokens = tokenize(description);
    const auto ids = model.vocab.encode(tokens);
    return pool_embed(model.table, ids, model.pooling);
}

Vector embed_text(const TextModel& model, std::string_view description) {
    return pca_transform(model.pca, text_vector_full(model, description));
}

Json text_model_to_json(const TextModel& model) {
    Json j = model_envelope("text");
    Json tokens = Json::array();
    for (std::size_t i = 2; i < model.vocab.size(); ++i) tokens.push_back(model.vocab.token(i));
    j["tokens"] = std::move(tokens);
    j["table"] = matrix_to_json(model.table);
    j["pooling"] = std::string(to_string(model.pooling));
    j["pca"] = pca_to_json(model.pca);
    return j;
}

TextModel text_model_from_json(const Json& j) {
    check_envelope(j, "text");
    TextModel m;
    try {
        m.vocab = Vocabulary(j.at("tokens").get<std::vector<std::string>>());
        m.table = matrix_from_json(j.at("table"));
        m.pooling = pooling_from_string(j.at("pooling").get<std::string>());
        m.pca = pca_from_json(j.at("pca"));
    } catch (const Json::exception& e) {
        throw FormatError(std::string("text model dump: ") + e.what());
    }
    if (m.table.rows() != m.vocab.size()) throw FormatError("text model dump: table rows do not match vocabulary");
    if (m.pca.input_dim() != m.table.cols()) throw FormatError("text model dump: PCA input does not match table");
    return m;
}

void save_embedding_table(const std::filesystem::path& path, const Vocabulary& vocab, const DenseMatrix& table) {
    if (table.rows() != vocab.size()) throw ShapeError("save_embedding_table: table rows do not match vocabulary");
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        out << vocab.token(i);
        for (const double x : table.row(i)) out << ' ' << csv::format_double(x);
        out << '\n';
    }
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace mhpp
