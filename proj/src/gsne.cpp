#include "mhpp/gsne.hpp"

#include <algorithm>
#include <cmath>

#include "mhpp/error.hpp"

namespace mhpp {
namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::size_t schema_dim(Partition p) {
    switch (p) {
        case Partition::house: return kRawFeatureCount;
        case Partition::region: return poi_attribute_count(PoiKind::region);
        case Partition::school: return poi_attribute_count(PoiKind::school);
        case Partition::train_station: return poi_attribute_count(PoiKind::train_station);
    }
    return 0;
}

struct NodeForward {
    Partition partition = Partition::house;
    Vector x;        // standardized attributes
    Vector h;        // attribute-encoder output u
    Vector z_mu;
    Vector z_sigma;
    GaussianEmbedding g;
};

const std::array<AttributeEncoder, kPartitionCount>& attribute_encoders(const GsneParams& p, Order o) {
    return o == Order::first ? p.first_attribute : p.second_attribute;
}
std::array<AttributeEncoder, kPartitionCount>& attribute_encoders(GsneParams& p, Order o) {
    return o == Order::first ? p.first_attribute : p.second_attribute;
}
const GaussianEncoder& gaussian(const GsneParams& p, Order o) { return o == Order::first ? p.first : p.second; }
GaussianEncoder& gaussian(GsneParams& p, Order o) { return o == Order::first ? p.first : p.second; }

NodeForward forward(const GsneParams& params, Partition partition, std::span<const double> raw,
                    Order order) {
    const auto pi = static_cast<std::size_t>(partition);
    const auto& scaling = params.attribute_scaling[pi];
    const auto& enc = attribute_encoders(params, order)[pi];
    if (raw.size() != enc.weight.cols()) {
        throw ShapeError("gsne: partition '" + std::string(to_string(partition)) + "' expects " +
                         std::to_string(enc.weight.cols()) + " attributes, got " +
                         std::to_string(raw.size()));
    }
    NodeForward f;
    f.partition = partition;
    f.x = scaling.apply(raw);
    f.h = matvec(enc.weight, f.x);
    for (std::size_t k = 0; k < f.h.size(); ++k) f.h[k] = std::tanh(f.h[k] + enc.bias(k, 0));
    const auto& ge = gaussian(params, order);
    f.z_mu = matvec(ge.w_mu, f.h);
    f.z_sigma = matvec(ge.w_sigma, f.h);
    const std::size_t L = ge.output_dim();
    f.g.mu.resize(L);
    f.g.sigma.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        f.z_mu[l] += ge.b_mu(l, 0);
        f.z_sigma[l] += ge.b_sigma(l, 0);
        f.g.mu[l] = std::max(0.0, f.z_mu[l]);
        f.g.sigma[l] = std::max(0.0, f.z_sigma[l]) + 1.0;
    }
    return f;
}

NodeForward forward_node(const GsneParams& params, const GeoGraph& graph, std::size_t node, Order order) {
    const auto& n = graph.node(node);
    return forward(params, n.partition, n.attributes, order);
}

/// Accumulates dLoss/dparams given dLoss/dmu and dLoss/dsigma of one node.
void backward(const GsneParams& params, const NodeForward& f, Order order, std::span<const double> d_mu,
              std::span<const double> d_sigma, GsneParams& grad) {
    const auto pi = static_cast<std::size_t>(f.partition);
    const auto& ge = gaussian(params, order);
    auto& gg = gaussian(grad, order);
    const std::size_t L = ge.output_dim();
    Vector dz_mu(L), dz_sigma(L);
    for (std::size_t l = 0; l < L; ++l) {
        dz_mu[l] = f.z_mu[l] > 0.0 ? d_mu[l] : 0.0;
        dz_sigma[l] = f.z_sigma[l] > 0.0 ? d_sigma[l] : 0.0;
        gg.b_mu(l, 0) += dz_mu[l];
        gg.b_sigma(l, 0) += dz_sigma[l];
    }
    add_outer(gg.w_mu, dz_mu, f.h);
    add_outer(gg.w_sigma, dz_sigma, f.h);
    Vector dh = matvec_transposed(ge.w_mu, dz_mu);
    const Vector dh_sigma = matvec_transposed(ge.w_sigma, dz_sigma);
    for (std::size_t k = 0; k < dh.size(); ++k) dh[k] = (dh[k] + dh_sigma[k]) * (1.0 - f.h[k] * f.h[k]);
    auto& enc_grad = attribute_encoders(grad, order)[pi];
    add_outer(enc_grad.weight, dh, f.x);
    for (std::size_t k = 0; k < dh.size(); ++k) enc_grad.bias(k, 0) += dh[k];
}

/// Adds scale * dKL(a||b)/d{mu,sigma} of both arguments.
void kl_accumulate(const GaussianEmbedding& a, const GaussianEmbedding& b, double scale, Vector& da_mu,
                   Vector& da_sigma, Vector& db_mu, Vector& db_sigma) {
    for (std::size_t l = 0; l < a.mu.size(); ++l) {
        const double sa = a.sigma[l], sb = b.sigma[l];
        const double diff = b.mu[l] - a.mu[l];
        const double sb2 = sb * sb;
        da_mu[l] += scale * (-diff / sb2);
        db_mu[l] += scale * (diff / sb2);
        da_sigma[l] += scale * (sa / sb2 - 1.0 / sa);
        db_sigma[l] += scale * (-(sa * sa) / (sb2 * sb) - diff * diff / (sb2 * sb) + 1.0 / sb);
    }
}

GsneLoss proximity_loss(const GsneParams& params, const GeoGraph& graph, const GsneBatch& batch,
                        Order source_order) {
    if (batch.edges.empty()) throw DomainError("gsne loss: empty batch");
    if (batch.negatives.size() != batch.edges.size()) throw ShapeError("gsne loss: negatives not parallel to edges");
    GsneLoss out;
    out.gradient = params.zeros_like();
    const double inv_b = 1.0 / static_cast<double>(batch.edges.size());
    const std::size_t L = params.embedding_dim();

    for (std::size_t e = 0; e < batch.edges.size(); ++e) {
        const auto& edge = batch.edges[e];
        const auto src = forward_node(params, graph, edge.source, source_order);
        Vector ds_mu(L, 0.0), ds_sigma(L, 0.0);

        auto term = [&](std::size_t other, bool positive) {
            const auto tgt = forward_node(params, graph, other, Order::first);
            Vector dt_mu(L, 0.0), dt_sigma(L, 0.0);
            const double kl = kl_divergence(src.g, tgt.g);
            const double value = positive ? softplus(kl) : softplus(-kl);
            const double dl_dkl = positive ? logistic(kl) : -logistic(-kl);
            kl_accumulate(src.g, tgt.g, inv_b * dl_dkl, ds_mu, ds_sigma, dt_mu, dt_sigma);
            backward(params, tgt, Order::first, dt_mu, dt_sigma, out.gradient);
            return value;
        };

        double edge_loss = term(edge.target, true);
        for (const std::size_t n : batch.negatives[e]) edge_loss += term(n, false);
        out.loss += inv_b * edge_loss;
        backward(params, src, source_order, ds_mu, ds_sigma, out.gradient);
    }
    return out;
}

void put_encoder(Json& j, const AttributeEncoder& e) {
    j["weight"] = matrix_to_json(e.weight);
    j["bias"] = matrix_to_json(e.bias);
}

AttributeEncoder get_encoder(const Json& j) {
    return {matrix_from_json(j.at("weight")), matrix_from_json(j.at("bias"))};
}

Json gaussian_to_json(const GaussianEncoder& g) {
    return Json{{"w_mu", matrix_to_json(g.w_mu)},
                {"b_mu", matrix_to_json(g.b_mu)},
                {"w_sigma", matrix_to_json(g.w_sigma)},
                {"b_sigma", matrix_to_json(g.b_sigma)}};
}

GaussianEncoder gaussian_from_json(const Json& j) {
    return {matrix_from_json(j.at("w_mu")), matrix_from_json(j.at("b_mu")),
            matrix_from_json(j.at("w_sigma")), matrix_from_json(j.at("b_sigma"))};
}

}  // namespace

GaussianEmbedding gaussian_encode(const GaussianEncoder& encoder, std::span<const double> u) {
    if (u.size() != encoder.input_dim()) throw ShapeError("gaussian_encode: input dimension mismatch");
    GaussianEmbedding g;
    g.mu = matvec(encoder.w_mu, u);
    g.sigma = matvec(encoder.w_sigma, u);
    for (std::size_t l = 0; l < g.mu.size(); ++l) {
        g.mu[l] = std::max(0.0, g.mu[l] + encoder.b_mu(l, 0));
        g.sigma[l] = std::max(0.0, g.sigma[l] + encoder.b_sigma(l, 0)) + 1.0;
    }
    return g;
}

double kl_divergence(const GaussianEmbedding& a, const GaussianEmbedding& b) {
    if (a.mu.size() != b.mu.size() || a.sigma.size() != b.sigma.size() || a.mu.size() != a.sigma.size()) {
        throw ShapeError("kl_divergence: dimension mismatch");
    }
    double kl = 0.0;
    for (std::size_t l = 0; l < a.mu.size(); ++l) {
        const double ratio = a.sigma[l] / b.sigma[l];
        const double diff = (b.mu[l] - a.mu[l]) / b.sigma[l];
        kl += ratio * ratio + diff * diff - 1.0 - 2.0 * std::log(ratio);
    }
    return std::max(0.0, 0.5 * kl);
}

std::vector<DenseMatrix*> GsneParams::parameters() {
    std::vector<DenseMatrix*> out;
    for (auto* encs : {&first_attribute, &second_attribute}) {
        for (auto& e : *encs) {
            out.push_back(&e.weight);
            out.push_back(&e.bias);
        }
    }
    for (auto* g : {&first, &second}) {
        out.push_back(&g->w_mu);
        out.push_back(&g->b_mu);
        out.push_back(&g->w_sigma);
        out.push_back(&g->b_sigma);
    }
    return out;
}

std::vector<const DenseMatrix*> GsneParams::parameters() const {
    auto mutable_list = const_cast<GsneParams*>(this)->parameters();
    return {mutable_list.begin(), mutable_list.end()};
}

GsneParams GsneParams::zeros_like() const {
    GsneParams z = *this;
    for (auto* p : z.parameters()) p->fill(0.0);
    return z;
}

GaussianEmbedding encode_node(const GsneParams& params, Partition partition,
                              std::span<const double> raw_attributes, Order order) {
    return forward(params, partition, raw_attributes, order).g;
}

GsneParams init_gsne(const GeoGraph& graph, const GsneConfig& config) {
    if (config.embedding_dim == 0 || config.hidden_dim == 0) {
        throw DomainError("init_gsne: dimensions must be positive");
    }
    Rng rng(derive_seed(config.seed, "gsne.init"));
    GsneParams p;
    p.append_sigma = config.append_sigma;
    const std::size_t H = config.hidden_dim;
    const std::size_t L = config.embedding_dim;
    for (std::size_t pi = 0; pi < kPartitionCount; ++pi) {
        const auto part = static_cast<Partition>(pi);
        const auto members = graph.partition_nodes(part);
        std::size_t dim = schema_dim(part);
        if (!members.empty()) {
            dim = graph.node(members.front()).attributes.size();
            DenseMatrix attrs(members.size(), dim);
            for (std::size_t r = 0; r < members.size(); ++r) {
                const auto& a = graph.node(members[r]).attributes;
                if (a.size() != dim) throw ShapeError("init_gsne: inconsistent attribute length in partition");
                std::copy(a.begin(), a.end(), attrs.row(r).begin());
            }
            p.attribute_scaling[pi] = standardizer_fit(attrs);
        } else {
            p.attribute_scaling[pi] = {Vector(dim, 0.0), Vector(dim, 1.0)};
        }
        const double s = 1.0 / std::sqrt(static_cast<double>(dim));
        p.first_attribute[pi] = {DenseMatrix::random_normal(H, dim, s, rng), DenseMatrix(H, 1)};
        p.second_attribute[pi] = {DenseMatrix::random_normal(H, dim, s, rng), DenseMatrix(H, 1)};
    }
    const double sh = 1.0 / std::sqrt(static_cast<double>(H));
    for (auto* g : {&p.first, &p.second}) {
        g->w_mu = DenseMatrix::random_normal(L, H, sh, rng);
        g->b_mu = DenseMatrix(L, 1, 0.5);
        g->w_sigma = DenseMatrix::random_normal(L, H, 0.3 * sh, rng);
        g->b_sigma = DenseMatrix(L, 1, 0.0);
    }
    return p;
}

GsneBatch sample_gsne_batch(const GeoGraph& graph, const EdgeSampler& sampler, std::size_t batch,
                            std::size_t negatives, Rng& rng) {
    GsneBatch b;
    b.edges = sampler.sample(batch, rng);
    b.negatives.reserve(b.edges.size());
    for (const auto& e : b.edges) b.negatives.push_back(sample_negatives(graph, e.source, negatives, rng));
    return b;
}

GsneLoss first_order_loss(const GsneParams& params, const GeoGraph& graph, const GsneBatch& batch) {
    return proximity_loss(params, graph, batch, Order::first);
}

GsneLoss second_order_loss(const GsneParams& params, const GeoGraph& graph, const GsneBatch& batch) {
    return proximity_loss(params, graph, batch, Order::second);
}

GsneParams train_gsne(const GeoGraph& graph, const GsneConfig& config, GsneTrainingLog* log) {
    if (graph.node_count() == 0) throw DomainError("train_gsne: empty graph");
    if (graph.edge_count() == 0) throw DomainError("train_gsne: graph has no edges");
    if (config.batch_size == 0 || config.epochs == 0) throw DomainError("train_gsne: batch and epochs must be positive");

    GsneParams params = init_gsne(graph, config);
    const EdgeSampler sampler(graph);
    Rng rng(derive_seed(config.seed, "gsne.train"));
    auto plist = params.parameters();
    AdamOptimizer adam(plist, AdamConfig{.learning_rate = config.learning_rate});

    std::size_t batches = (graph.edge_count() + config.batch_size - 1) / config.batch_size;
    if (config.max_batches_per_epoch > 0) batches = std::min(batches, config.max_batches_per_epoch);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double total = 0.0;
        for (std::size_t b = 0; b < batches; ++b) {
            const auto batch = sample_gsne_batch(graph, sampler, config.batch_size, config.negatives, rng);
            auto first = first_order_loss(params, graph, batch);
            const auto second = second_order_loss(params, graph, batch);
            auto gsum = first.gradient.parameters();
            const auto gsec = second.gradient.parameters();
            for (std::size_t i = 0; i < gsum.size(); ++i) {
                auto dst = gsum[i]->data();
                const auto src = gsec[i]->data();
                for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
            }
            std::vector<const DenseMatrix*> grads(gsum.begin(), gsum.end());
            adam.step(plist, grads);
            total += first.loss + second.loss;
        }
        if (log) log->epoch_loss.push_back(total / static_cast<double>(batches));
    }
    return params;
}

Vector embed_geo_attributes(const GsneParams& params, std::span<const double> raw_attributes) {
    const auto a = forward(params, Partition::house, raw_attributes, Order::first).g;
    const auto b = forward(params, Partition::house, raw_attributes, Order::second).g;
    Vector out = a.mu;
    out.insert(out.end(), b.mu.begin(), b.mu.end());
    if (params.append_sigma) {
        out.insert(out.end(), a.sigma.begin(), a.sigma.end());
        out.insert(out.end(), b.sigma.begin(), b.sigma.end());
    }
    return out;
}

Vector embed_geo(const GsneParams& params, const GeoGraph& graph, std::string_view house_id) {
    const auto idx = graph.find(house_id);
    if (!idx) throw DomainError("embed_geo: unknown node '" + std::string(house_id) + "'");
    const auto& node = graph.node(*idx);
    if (node.partition != Partition::house) {
        throw DomainError("embed_geo: node '" + std::string(house_id) + "' is a " +
                          std::string(to_string(node.partition)) + ", not a house");
    }
    return embed_geo_attributes(params, node.attributes);
}

Json gsne_to_json(const GsneParams& params) {
    Json j = model_envelope("gsne");
    j["append_sigma"] = params.append_sigma;
    Json parts = Json::array();
    for (std::size_t pi = 0; pi < kPartitionCount; ++pi) {
        Json part;
        part["partition"] = std::string(to_string(static_cast<Partition>(pi)));
        part["scaling"] = standardizer_to_json(params.attribute_scaling[pi]);
        put_encoder(part["first"], params.first_attribute[pi]);
        put_encoder(part["second"], params.second_attribute[pi]);
        parts.push_back(std::move(part));
    }
    j["partitions"] = std::move(parts);
    j["first_gaussian"] = gaussian_to_json(params.first);
    j["second_gaussian"] = gaussian_to_json(params.second);
    return j;
}

GsneParams gsne_from_json(const Json& j) {
    check_envelope(j, "gsne");
    GsneParams p;
    try {
        p.append_sigma = j.at("append_sigma").get<bool>();
        const auto& parts = j.at("partitions");
        if (parts.size() != kPartitionCount) throw FormatError("gsne dump: wrong partition count");
        for (std::size_t pi = 0; pi < kPartitionCount; ++pi) {
            p.attribute_scaling[pi] = standardizer_from_json(parts[pi].at("scaling"));
            p.first_attribute[pi] = get_encoder(parts[pi].at("first"));
            p.second_attribute[pi] = get_encoder(parts[pi].at("second"));
        }
        p.first = gaussian_from_json(j.at("first_gaussian"));
        p.second = gaussian_from_json(j.at("second_gaussian"));
    } catch (const Json::exception& e) {
        throw FormatError(std::string("gsne dump: ") + e.what());
    }
    return p;
}

}  // namespace mhpp
