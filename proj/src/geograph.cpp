#include "mhpp/geograph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_set>

#include "mhpp/error.hpp"

namespace mhpp {

double planar_distance(GeoPosition a, GeoPosition b) {
    constexpr double kRad = std::numbers::pi / 180.0;
    const double mean_lat = (a.latitude + b.latitude) * 0.5 * kRad;
    const double dx = (b.longitude - a.longitude) * kRad * std::cos(mean_lat) * kEarthRadiusM;
    const double dy = (b.latitude - a.latitude) * kRad * kEarthRadiusM;
    return std::sqrt(dx * dx + dy * dy);
}

std::string_view to_string(Partition p) {
    switch (p) {
        case Partition::house: return "house";
        case Partition::region: return "region";
        case Partition::school: return "school";
        case Partition::train_station: return "train_station";
    }
    return "house";
}

Partition partition_of(PoiKind kind) {
    switch (kind) {
        case PoiKind::region: return Partition::region;
        case PoiKind::school: return Partition::school;
        case PoiKind::train_station: return Partition::train_station;
    }
    return Partition::region;
}

GeoGraph::GeoGraph(std::vector<GeoNode> nodes, std::vector<GeoEdge> edges, GraphConfig config)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), adjacency_(nodes_.size()), config_(config) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i].id, i).second) {
            throw DomainError("GeoGraph: duplicate node id '" + nodes_[i].id + "'");
        }
    }
    for (const auto& e : edges_) {
        if (e.source == e.target) throw DomainError("GeoGraph: self edge");
        adjacency_.at(e.source).push_back({e.target, e.weight});
        adjacency_.at(e.target).push_back({e.source, e.weight});
    }
    for (auto& adj : adjacency_) {
        std::sort(adj.begin(), adj.end(),
                  [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    }
}

bool GeoGraph::adjacent(std::size_t a, std::size_t b) const {
    const auto& adj = adjacency_.at(a);
    const auto it = std::lower_bound(adj.begin(), adj.end(), b,
                                     [](const Neighbor& n, std::size_t v) { return n.node < v; });
    return it != adj.end() && it->node == b;
}

std::optional<std::size_t> GeoGraph::find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::size_t> GeoGraph::partition_nodes(Partition p) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].partition == p) out.push_back(i);
    return out;
}

std::vector<GeoNode> house_nodes(std::span<const Listing> listings) {
    std::vector<GeoNode> nodes;
    nodes.reserve(listings.size());
    for (const auto& l : listings) {
        nodes.push_back({l.id, Partition::house, Vector(l.raw_features.begin(), l.raw_features.end()),
                         {l.latitude, l.longitude}});
    }
    return nodes;
}

std::vector<GeoNode> poi_nodes(std::span<const Poi> pois) {
    std::vector<GeoNode> nodes;
    nodes.reserve(pois.size());
    for (const auto& p : pois) {
        nodes.push_back({p.id, partition_of(p.kind), p.attributes, {p.latitude, p.longitude}});
    }
    return nodes;
}

GeoGraph build_graph(std::span<const Listing> listings, std::span<const Poi> pois,
                     const GraphConfig& config) {
    auto nodes = house_nodes(listings);
    auto extra = poi_nodes(pois);
    nodes.insert(nodes.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
    return build_graph(std::move(nodes), config);
}

GeoGraph build_graph(std::vector<GeoNode> nodes, const GraphConfig& config) {
    if (!(config.delta_max > 0.0)) throw DomainError("build_graph: delta_max must be positive");
    if (!(config.delta_min > 0.0)) throw DomainError("build_graph: delta_min must be positive");
    const std::size_t n = nodes.size();
    std::vector<GeoEdge> edges;

    auto consider = [&](std::size_t i, std::size_t j) {
        if (config.cross_partition_only && nodes[i].partition == nodes[j].partition) return;
        const double d = planar_distance(nodes[i].position, nodes[j].position);
        if (d < config.delta_max) {
            edges.push_back({i, j, d, 1.0 / std::max(d, config.delta_min)});
        }
    };

    if (n == 0) return GeoGraph(std::move(nodes), {}, config);

    double lat_lo = nodes[0].position.latitude, lat_hi = lat_lo;
    double mean_lat = 0.0;
    for (const auto& nd : nodes) {
        lat_lo = std::min(lat_lo, nd.position.latitude);
        lat_hi = std::max(lat_hi, nd.position.latitude);
        mean_lat += nd.position.latitude;
    }
    mean_lat /= static_cast<double>(n);

    if (lat_hi - lat_lo > 5.0 || n < 64) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) consider(i, j);
    } else {
        // Grid buckets of side slightly above delta_max in a single global
        // projection; candidate pairs come from the 3x3 neighbourhood and are
        // then tested with the exact pairwise distance.
        constexpr double kRad = std::numbers::pi / 180.0;
        const double cell = config.delta_max * 1.05;
        const double kx = kRad * std::cos(mean_lat * kRad) * kEarthRadiusM;
        const double ky = kRad * kEarthRadiusM;
        std::map<std::pair<long long, long long>, std::vector<std::size_t>> grid;
        std::vector<std::pair<long long, long long>> cell_of(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto cx = static_cast<long long>(std::floor(nodes[i].position.longitude * kx / cell));
            const auto cy = static_cast<long long>(std::floor(nodes[i].position.latitude * ky / cell));
            cell_of[i] = {cx, cy};
            grid[{cx, cy}].push_back(i);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto [cx, cy] = cell_of[i];
            for (long long dx = -1; dx <= 1; ++dx) {
                for (long long dy = -1; dy <= 1; ++dy) {
                    const auto it = grid.find({cx + dx, cy + dy});
                    if (it == grid.end()) continue;
                    for (const std::size_t j : it->second)
                        if (j > i) consider(i, j);
                }
            }
        }
        std::sort(edges.begin(), edges.end(), [](const GeoEdge& a, const GeoEdge& b) {
            return a.source != b.source ? a.source < b.source : a.target < b.target;
        });
    }
    return GeoGraph(std::move(nodes), std::move(edges), config);
}

// ---------------------------------------------------------------------------

EdgeSampler::EdgeSampler(const GeoGraph& graph) : graph_(&graph) {
    const std::size_t m = graph.edge_count();
    if (m == 0) throw DomainError("EdgeSampler: graph has no edges");
    double total = 0.0;
    for (const auto& e : graph.edges()) total += e.weight;
    probability_.resize(m);
    alias_.resize(m);
    std::vector<double> scaled(m);
    std::vector<std::size_t> small, large;
    for (std::size_t i = 0; i < m; ++i) {
        scaled[i] = graph.edges()[i].weight * static_cast<double>(m) / total;
        (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        const std::size_t s = small.back();
        small.pop_back();
        const std::size_t l = large.back();
        probability_[s] = scaled[s];
        alias_[s] = l;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (const std::size_t i : large) {
        probability_[i] = 1.0;
        alias_[i] = i;
    }
    for (const std::size_t i : small) {
        probability_[i] = 1.0;
        alias_[i] = i;
    }
}

std::vector<SampledEdge> EdgeSampler::sample(std::size_t batch, Rng& rng) const {
    std::vector<SampledEdge> out;
    out.reserve(batch);
    const auto m = static_cast<std::uint64_t>(probability_.size());
    for (std::size_t b = 0; b < batch; ++b) {
        const auto slot = static_cast<std::size_t>(rng.uniform_index(m));
        const std::size_t idx = rng.uniform() < probability_[slot] ? slot : alias_[slot];
        const auto& e = graph_->edges()[idx];
        if (rng.bernoulli(0.5)) {
            out.push_back({e.source, e.target, e.weight});
        } else {
            out.push_back({e.target, e.source, e.weight});
        }
    }
    return out;
}

std::vector<SampledEdge> sample_edge_batch(const GeoGraph& graph, std::size_t batch, Rng& rng) {
    if (graph.edge_count() == 0) throw DomainError("sample_edge_batch: graph has no edges");
    return EdgeSampler(graph).sample(batch, rng);
}

std::vector<std::size_t> sample_negatives(const GeoGraph& graph, std::size_t source, std::size_t k,
                                          Rng& rng) {
    const std::size_t n = graph.node_count();
    if (source >= n) throw DomainError("sample_negatives: unknown source node");
    const std::size_t eligible = n - 1 - graph.neighbors(source).size();
    if (eligible < k) {
        throw DomainError("sample_negatives: only " + std::to_string(eligible) +
                          " non-neighbours available for node '" + graph.node(source).id +
                          "', need " + std::to_string(k));
    }
    std::vector<std::size_t> out;
    out.reserve(k);
    if (eligible * 4 >= n) {
        while (out.size() < k) {
            const auto c = static_cast<std::size_t>(rng.uniform_index(n));
            if (c == source || graph.adjacent(source, c)) continue;
            if (std::find(out.begin(), out.end(), c) != out.end()) continue;
            out.push_back(c);
        }
        return out;
    }
    std::vector<std::size_t> pool;
    pool.reserve(eligible);
    for (std::size_t c = 0; c < n; ++c)
        if (c != source && !graph.adjacent(source, c)) pool.push_back(c);
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

}  // namespace mhpp
