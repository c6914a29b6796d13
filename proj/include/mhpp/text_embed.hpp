#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mhpp/model_io.hpp"
#include "mhpp/numerics.hpp"

namespace mhpp {

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kUnkToken = "[UNK]";

/// Lowercases, splits on every run of non-alphanumeric characters and
/// prepends the CLS token.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
public:
    static constexpr std::size_t cls = 0;
    static constexpr std::size_t unk = 1;

    /// Specials only.
    Vocabulary();
    /// `tokens` excludes the two specials and must be free of duplicates.
    explicit Vocabulary(std::vector<std::string> tokens);

    std::size_t size() const noexcept { return tokens_.size(); }
    /// UNK for anything not in the vocabulary.
    std::size_t index_of(std::string_view token) const;
    const std::string& token(std::size_t index) const { return tokens_.at(index); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }
    std::vector<std::size_t> encode(std::span<const std::string> tokens) const;

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Tokens seen at least min_count times, most frequent first, ties broken
/// lexicographically.
Vocabulary build_vocab(std::span<const std::string> descriptions, std::size_t min_count = 1);

struct TokenEmbeddings {
    DenseMatrix input;    // |V| x d
    DenseMatrix context;  // |V| x d, training only

    std::size_t dim() const noexcept { return input.cols(); }
};

struct SkipGramConfig {
    std::size_t dim = 256;
    std::size_t window = 4;
    std::size_t negatives = 5;
    std::size_t epochs = 5;
    double learning_rate = 0.025;  // decays linearly to 1e-4 of itself
    std::uint64_t seed = 1;
};

/// One (center, context, negatives) term of the negative-sampling objective:
///   -ln s(u_c . v_o) - sum_n ln s(-u_c . v_n)
struct SkipGramTerm {
    std::size_t center = 0;
    std::size_t context = 0;
    std::vector<std::size_t> negatives;
};

struct SkipGramTermLoss {
    double loss = 0.0;
    Vector d_center;                 // wrt input row of center
    Vector d_context;                // wrt context row of context
    std::vector<Vector> d_negatives; // wrt context rows of negatives
};

SkipGramTermLoss skipgram_term_loss(const TokenEmbeddings& embeddings, const SkipGramTerm& term);

struct SkipGramLog {
    std::vector<double> epoch_loss;  // mean term loss per epoch
};

TokenEmbeddings train_token_embeddings(std::span<const std::string> descriptions, const Vocabulary& vocab,
                                       const SkipGramConfig& config, SkipGramLog* log = nullptr);

enum class Pooling { cls, mean, max };
std::string_view to_string(Pooling p);
Pooling pooling_from_string(std::string_view s);

/// Pools rows of `table` selected by token ids; ids must be non-empty.
Vector pool_embed(const DenseMatrix& table, std::span<const std::size_t> token_ids, Pooling strategy);

struct TextEmbedConfig {
    SkipGramConfig skipgram;
    std::size_t min_count = 2;
    Pooling pooling = Pooling::mean;
    std::size_t output_dim = 128;
};

struct TextModel {
    Vocabulary vocab;
    DenseMatrix table;  // input vectors
    Pooling pooling = Pooling::mean;
    PcaModel pca;

    std::size_t output_dim() const noexcept { return pca.output_dim(); }
};

/// Vocabulary, token vectors and PCA are all fitted on the given (training)
/// descriptions only.
TextModel fit_text_model(std::span<const std::string> train_descriptions, const TextEmbedConfig& config,
                         SkipGramLog* log = nullptr);

/// Pooled, unreduced vector.
Vector text_vector_full(const TextModel& model, std::string_view description);
/// T_E
Vector embed_text(const TextModel& model, std::string_view description);

Json text_model_to_json(const TextModel& model);
TextModel text_model_from_json(const Json& j);

/// One line per token: the token followed by its d decimals.
void save_embedding_table(const std::filesystem::path& path, const Vocabulary& vocab, const DenseMatrix& table);

}  // namespace mhpp
