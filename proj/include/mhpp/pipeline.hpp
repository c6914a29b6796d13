#pragma once

#include <span>
#include <vector>

#include "mhpp/clip.hpp"
#include "mhpp/config.hpp"
#include "mhpp/dataset.hpp"
#include "mhpp/evalharness.hpp"
#include "mhpp/fusion.hpp"
#include "mhpp/geograph.hpp"
#include "mhpp/gsne.hpp"
#include "mhpp/text_embed.hpp"

namespace mhpp {

SplitIndices make_split(const RunConfig& config, std::span<const Listing> listings);

/// Training houses plus every POI.
GeoGraph training_graph(const RunConfig& config, std::span<const Listing> listings, std::span<const Poi> pois,
                        const SplitIndices& split);

GsneParams fit_gsne_stage(const RunConfig& config, std::span<const Listing> listings, std::span<const Poi> pois,
                          const SplitIndices& split, GsneTrainingLog* log = nullptr);
TextModel fit_text_stage(const RunConfig& config, std::span<const Listing> listings, const SplitIndices& split,
                         SkipGramLog* log = nullptr);
ClipModel fit_clip_stage(const RunConfig& config, std::span<const Listing> listings, const SplitIndices& split,
                         ClipTrainingLog* log = nullptr);

struct TrainedModels {
    GsneParams gsne;
    TextModel text;
    ClipModel clip;
};

TrainedModels fit_all_stages(const RunConfig& config, std::span<const Listing> listings, std::span<const Poi> pois,
                             const SplitIndices& split);

/// Raw, both geo slices, T_E and I_E for one listing.
ListingStreams listing_streams(const TrainedModels& models, const Listing& listing);
std::vector<ListingStreams> compute_streams(const TrainedModels& models, std::span<const Listing> listings);

Vector log_prices(std::span<const Listing> listings);

/// Trains every embedding model on the training split and runs the grid.
AblationResult run_pipeline_ablation(const RunConfig& config, std::span<const Listing> listings,
                                     std::span<const Poi> pois, TrainedModels* models = nullptr);

}  // namespace mhpp
