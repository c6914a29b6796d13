#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mhpp/dataset.hpp"
#include "mhpp/numerics.hpp"
#include "mhpp/rng.hpp"

namespace mhpp {

inline constexpr double kEarthRadiusM = 6371000.0;

struct GeoPosition {
    double latitude = 0.0;
    double longitude = 0.0;
};

/// Equirectangular projection about the pair's mean latitude, then the
/// Euclidean norm, in meters.
double planar_distance(GeoPosition a, GeoPosition b);

enum class Partition { house = 0, region = 1, school = 2, train_station = 3 };
inline constexpr std::size_t kPartitionCount = 4;

std::string_view to_string(Partition p);
Partition partition_of(PoiKind kind);

struct GeoNode {
    std::string id;
    Partition partition = Partition::house;
    Vector attributes;
    GeoPosition position;
};

struct GeoEdge {
    std::size_t source = 0;  // source < target
    std::size_t target = 0;
    double distance = 0.0;
    double weight = 0.0;
};

struct Neighbor {
    std::size_t node = 0;
    double weight = 0.0;
};

struct GraphConfig {
    double delta_max = 1000.0;  // meters; edges need distance < delta_max
    double delta_min = 1.0;     // weight clamp: w = 1 / max(distance, delta_min)
    bool cross_partition_only = false;
};

class GeoGraph {
public:
    GeoGraph() = default;
    GeoGraph(std::vector<GeoNode> nodes, std::vector<GeoEdge> edges, GraphConfig config);

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    const std::vector<GeoNode>& nodes() const noexcept { return nodes_; }
    const GeoNode& node(std::size_t i) const { return nodes_.at(i); }
    const std::vector<GeoEdge>& edges() const noexcept { return edges_; }
    /// Sorted by neighbour index.
    std::span<const Neighbor> neighbors(std::size_t i) const { return adjacency_.at(i); }
    bool adjacent(std::size_t a, std::size_t b) const;
    std::optional<std::size_t> find(std::string_view id) const;
    const GraphConfig& config() const noexcept { return config_; }
    /// Node indices of one partition, ascending.
    std::vector<std::size_t> partition_nodes(Partition p) const;

private:
    std::vector<GeoNode> nodes_;
    std::vector<GeoEdge> edges_;
    std::vector<std::vector<Neighbor>> adjacency_;
    std::unordered_map<std::string, std::size_t> index_;
    GraphConfig config_;
};

/// House nodes carry the 43 raw features as attributes; POI nodes carry
/// their per-kind attributes. Houses come first, in listing order.
GeoGraph build_graph(std::span<const Listing> listings, std::span<const Poi> pois,
                     const GraphConfig& config = {});
GeoGraph build_graph(std::vector<GeoNode> nodes, const GraphConfig& config);

std::vector<GeoNode> house_nodes(std::span<const Listing> listings);
std::vector<GeoNode> poi_nodes(std::span<const Poi> pois);

struct SampledEdge {
    std::size_t source = 0;
    std::size_t target = 0;
    double weight = 0.0;
};

/// Walker alias table over undirected edges, weighted by edge weight. The
/// orientation of each drawn edge is a fair coin.
class EdgeSampler {
public:
    explicit EdgeSampler(const GeoGraph& graph);
    std::vector<SampledEdge> sample(std::size_t batch, Rng& rng) const;

private:
    const GeoGraph* graph_;
    std::vector<double> probability_;
    std::vector<std::size_t> alias_;
};

std::vector<SampledEdge> sample_edge_batch(const GeoGraph& graph, std::size_t batch, Rng& rng);

/// k distinct nodes drawn uniformly from the nodes that are neither the
/// source nor adjacent to it. Throws DomainError if fewer than k exist.
std::vector<std::size_t> sample_negatives(const GeoGraph& graph, std::size_t source, std::size_t k,
                                          Rng& rng);

}  // namespace mhpp
