#include "mhpp/pipeline.hpp"

#include "mhpp/error.hpp"

namespace mhpp {
namespace {

std::vector<Listing> subset(std::span<const Listing> listings, std::span<const std::size_t> idx) {
    std::vector<Listing> out;
    out.reserve(idx.size());
    for (const auto i : idx) out.push_back(listings[i]);
    return out;
}

}  // namespace

SplitIndices make_split(const RunConfig& config, std::span<const Listing> listings) {
    return stratified_split(listings, config.split_ratio, config.split_bins, derive_seed(config.seed, "split"));
}

GeoGraph training_graph(const RunConfig& config, std::span<const Listing> listings, std::span<const Poi> pois,
                        const SplitIndices& split) {
    const auto train = subset(listings, split.train);
    return build_graph(train, pois, config.graph);
}

GsneParams fit_gsne_stage(const RunConfig& config, std::span<const Listing> listings, std::span<const Poi> pois,
                          const SplitIndices& split, GsneTrainingLog* log) {
    const auto graph = training_graph(config, listings, pois, split);
    return train_gsne(graph, config.gsne, log);
}

TextModel fit_text_stage(const RunConfig& config, std::span<const Listing> listings, const SplitIndices& split,
                         SkipGramLog* log) {
    std::vector<std::string> descriptions;
    descriptions.reserve(split.train.size());
    for (const auto i : split.train) descriptions.push_back(listings[i].description);
    return fit_text_model(descriptions, config.text, log);
}

ClipModel fit_clip_stage(const RunConfig& config, std::span<const Listing> listings, const SplitIndices& split,
                         ClipTrainingLog* log) {
    return train_clip(subset(listings, split.train), config.clip, log);
}

TrainedModels fit_all_stages(const RunConfig& config, std::span<const Listing> listings, std::span<const Poi> pois,
                             const SplitIndices& split) {
    return {fit_gsne_stage(config, listings, pois, split), fit_text_stage(config, listings, split),
            fit_clip_stage(config, listings, split)};
}

ListingStreams listing_streams(const TrainedModels& models, const Listing& listing) {
    ListingStreams s;
    s[static_cast<std::size_t>(Stream::raw)] = Vector(listing.raw_features.begin(), listing.raw_features.end());
    const auto a = encode_node(models.gsne, Partition::house, listing.raw_features, Order::first);
    const auto b = encode_node(models.gsne, Partition::house, listing.raw_features, Order::second);
    Vector first = a.mu, second = b.mu;
    if (models.gsne.append_sigma) {
        first.insert(first.end(), a.sigma.begin(), a.sigma.end());
        second.insert(second.end(), b.sigma.begin(), b.sigma.end());
    }
    s[static_cast<std::size_t>(Stream::geo_first)] = std::move(first);
    s[static_cast<std::size_t>(Stream::geo_second)] = std::move(second);
    s[static_cast<std::size_t>(Stream::text)] = embed_text(models.text, listing.description);
    s[static_cast<std::size_t>(Stream::image)] = embed_listing_image(models.clip, listing);
    return s;
}

std::vector<ListingStreams> compute_streams(const TrainedModels& models, std::span<const Listing> listings) {
    std::vector<ListingStreams> out;
    out.reserve(listings.size());
    for (const auto& l : listings) out.push_back(listing_streams(models, l));
    return out;
}

Vector log_prices(std::span<const Listing> listings) {
    Vector y;
    y.reserve(listings.size());
    for (const auto& l : listings) y.push_back(l.log_price);
    return y;
}

AblationResult run_pipeline_ablation(const RunConfig& config, std::span<const Listing> listings,
                                     std::span<const Poi> pois, TrainedModels* models) {
    const auto split = make_split(config, listings);
    auto trained = fit_all_stages(config, listings, pois, split);
    const auto streams = compute_streams(trained, listings);
    const auto y = log_prices(listings);
    auto result = run_ablation(streams, y, split, config.ablation());
    if (models) *models = std::move(trained);
    return result;
}

}  // namespace mhpp
