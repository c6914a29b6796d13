#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mhpp/geograph.hpp"
#include "mhpp/model_io.hpp"
#include "mhpp/numerics.hpp"

namespace mhpp {

/// N(mu, diag(sigma^2)); sigma >= 1 by construction of the encoder.
struct GaussianEmbedding {
    Vector mu;
    Vector sigma;
};

/// mu = ReLU(W_mu u + b_mu), sigma = ReLU(W_sigma u + b_sigma) + 1.
struct GaussianEncoder {
    DenseMatrix w_mu;      // L x H
    DenseMatrix b_mu;      // L x 1
    DenseMatrix w_sigma;   // L x H
    DenseMatrix b_sigma;   // L x 1

    std::size_t input_dim() const noexcept { return w_mu.cols(); }
    std::size_t output_dim() const noexcept { return w_mu.rows(); }
};

/// u = tanh(W x + b), one per graph partition.
struct AttributeEncoder {
    DenseMatrix weight;  // H x in
    DenseMatrix bias;    // H x 1
};

GaussianEmbedding gaussian_encode(const GaussianEncoder& encoder, std::span<const double> u);

/// Closed-form KL(a || b) between diagonal Gaussians.
double kl_divergence(const GaussianEmbedding& a, const GaussianEmbedding& b);

struct GsneConfig {
    std::size_t embedding_dim = 16;  // L
    std::size_t hidden_dim = 32;
    std::size_t negatives = 4;
    double learning_rate = 0.01;
    std::size_t epochs = 5;
    std::size_t batch_size = 128;
    std::size_t max_batches_per_epoch = 0;  // 0: ceil(edges / batch_size)
    std::uint64_t seed = 1;
    bool append_sigma = false;  // G_E = [mu1 | mu2] or [mu1 | mu2 | sigma1 | sigma2]
};

enum class Order { first, second };

struct GsneParams {
    std::array<Standardizer, kPartitionCount> attribute_scaling;
    std::array<AttributeEncoder, kPartitionCount> first_attribute;
    std::array<AttributeEncoder, kPartitionCount> second_attribute;
    GaussianEncoder first;
    GaussianEncoder second;
    bool append_sigma = false;

    std::size_t embedding_dim() const noexcept { return first.output_dim(); }
    std::size_t geo_dim() const noexcept { return (append_sigma ? 4 : 2) * embedding_dim(); }

    /// Every trainable matrix, in a fixed order.
    std::vector<DenseMatrix*> parameters();
    std::vector<const DenseMatrix*> parameters() const;
    /// Same structure, all trainable entries zero.
    GsneParams zeros_like() const;
};

/// Encodes a node's raw attributes through the chosen pipeline.
GaussianEmbedding encode_node(const GsneParams& params, Partition partition,
                              std::span<const double> raw_attributes, Order order);

GsneParams init_gsne(const GeoGraph& graph, const GsneConfig& config);

struct GsneBatch {
    std::vector<SampledEdge> edges;
    std::vector<std::vector<std::size_t>> negatives;  // parallel to edges
};

GsneBatch sample_gsne_batch(const GeoGraph& graph, const EdgeSampler& sampler, std::size_t batch,
                            std::size_t negatives, Rng& rng);

struct GsneLoss {
    double loss = 0.0;
    GsneParams gradient;  // parameter-shaped
};

/// Mean over edges of
///   -ln s(-KL(g_i || g_j)) - sum_n ln s(KL(g_i || g_n)),
/// with every g from the first-order pipeline.
GsneLoss first_order_loss(const GsneParams& params, const GeoGraph& graph, const GsneBatch& batch);
/// Same form; the source goes through the second-order pipeline and targets
/// and negatives through the first-order pipeline.
GsneLoss second_order_loss(const GsneParams& params, const GeoGraph& graph, const GsneBatch& batch);

struct GsneTrainingLog {
    std::vector<double> epoch_loss;  // mean combined loss per epoch
};

/// Adam on first + second order loss with equal weights.
GsneParams train_gsne(const GeoGraph& graph, const GsneConfig& config, GsneTrainingLog* log = nullptr);

/// G_E for a house node of the graph.
Vector embed_geo(const GsneParams& params, const GeoGraph& graph, std::string_view house_id);
/// G_E for a house given only its raw attributes (houses outside the graph).
Vector embed_geo_attributes(const GsneParams& params, std::span<const double> raw_attributes);

Json gsne_to_json(const GsneParams& params);
GsneParams gsne_from_json(const Json& j);

}  // namespace mhpp
