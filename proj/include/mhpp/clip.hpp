#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mhpp/dataset.hpp"
#include "mhpp/model_io.hpp"
#include "mhpp/numerics.hpp"
#include "mhpp/text_embed.hpp"

namespace mhpp {

/// Six statistics per patch: mean R, G, B, luminance std, mean absolute
/// horizontal and vertical gradient, all on a 0..1 intensity scale.
inline constexpr std::size_t kPatchStatistics = 6;

/// The collage is a 1 x 5 strip cut into P rows and 5P columns of patches.
std::size_t patch_feature_count(std::size_t grid);
/// Throws ShapeError when the collage does not divide into the patch grid.
Vector patch_features(const RasterImage& collage, std::size_t grid);

/// I_f = W2 tanh(W1 x + b1) + b2 over patch features x.
struct ImageEncoderParams {
    std::size_t grid = 3;
    DenseMatrix w1;  // hidden x features
    DenseMatrix b1;  // hidden x 1
    DenseMatrix w2;  // f_img x hidden
    DenseMatrix b2;  // f_img x 1

    std::size_t output_dim() const noexcept { return w2.rows(); }
};

/// T_f = tanh(W mean(table[tokens]) + b), with its own vocabulary.
struct ClipTextEncoderParams {
    Vocabulary vocab;
    DenseMatrix table;   // |V| x token_dim
    DenseMatrix weight;  // f_txt x token_dim
    DenseMatrix bias;    // f_txt x 1

    std::size_t output_dim() const noexcept { return weight.rows(); }
};

struct Projectors {
    DenseMatrix image;  // e x f_img
    DenseMatrix text;   // e x f_txt
    double temperature = 0.07;

    std::size_t embed_dim() const noexcept { return image.rows(); }
};

struct ClipConfig {
    std::size_t batch_size = 32;
    std::size_t embed_dim = 256;  // e
    double temperature = 0.07;
    double learning_rate = 2e-3;
    std::size_t epochs = 40;
    std::uint64_t seed = 1;
    std::size_t grid = 3;
    std::size_t tile = 12;
    std::size_t image_hidden = 128;
    std::size_t image_dim = 128;  // f_img
    std::size_t token_dim = 64;
    std::size_t text_dim = 64;    // f_txt
    std::size_t min_count = 2;
};

struct ClipModel {
    ImageEncoderParams image;
    ClipTextEncoderParams text;
    Projectors projectors;
    std::size_t tile = 12;

    std::size_t embed_dim() const noexcept { return projectors.embed_dim(); }
    /// Every trainable matrix in a fixed order.
    std::vector<DenseMatrix*> parameters();
    std::vector<const DenseMatrix*> parameters() const;
    ClipModel zeros_like() const;
};

Vector encode_image(const ImageEncoderParams& params, const RasterImage& collage);
Vector encode_text(const ClipTextEncoderParams& params, std::span<const std::size_t> token_ids);

/// Cosine similarity of every image row against every text row.
DenseMatrix similarity_matrix(const DenseMatrix& image_embeddings, const DenseMatrix& text_embeddings);

struct ClipLoss {
    double loss = 0.0;
    DenseMatrix d_sim;
};

/// Mean of row-wise and column-wise cross-entropy of sim / tau against the
/// diagonal pairing; gradient with respect to sim.
ClipLoss symmetric_clip_loss(const DenseMatrix& sim, double temperature);

/// One (collage, description) pair, preprocessed.
struct ClipExample {
    Vector features;
    std::vector<std::size_t> tokens;
};

ClipExample make_clip_example(const ClipModel& model, const Listing& listing);

struct ClipBatchLoss {
    double loss = 0.0;
    ClipModel gradient;
};

/// Loss and gradient for all parameter groups over one batch.
ClipBatchLoss clip_batch_loss(const ClipModel& model, std::span<const ClipExample> batch);

ClipModel init_clip(Vocabulary vocab, const ClipConfig& config);

struct ClipTrainingLog {
    std::vector<double> epoch_loss;
};

/// Adam over shuffled batches of exactly b pairs; the final partial batch is
/// dropped.
ClipModel train_clip(std::span<const Listing> train, const ClipConfig& config, ClipTrainingLog* log = nullptr);

/// L2-normalized I_E.
Vector embed_image(const ClipModel& model, const RasterImage& collage);
Vector embed_listing_image(const ClipModel& model, const Listing& listing);
/// L2-normalized projected text embedding.
Vector embed_clip_text(const ClipModel& model, std::string_view description);

/// Fraction of images whose most similar description in the batch is their own.
double retrieval_accuracy(const ClipModel& model, std::span<const Listing> batch);

Json clip_to_json(const ClipModel& model);
ClipModel clip_from_json(const Json& j);

}  // namespace mhpp
