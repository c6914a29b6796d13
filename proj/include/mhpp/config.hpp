#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mhpp/clip.hpp"
#include "mhpp/dataset.hpp"
#include "mhpp/evalharness.hpp"
#include "mhpp/fusion.hpp"
#include "mhpp/geograph.hpp"
#include "mhpp/gsne.hpp"
#include "mhpp/regressors.hpp"
#include "mhpp/text_embed.hpp"

namespace mhpp {

struct RunConfig {
    std::uint64_t seed = 7;

    // Synthetic corpus.
    std::size_t listings = 2000;
    std::size_t pois = 60;
    GeneratorConfig generator;

    // Existing corpus instead of generating one; both empty means synthetic.
    std::string input_listings;
    std::string input_pois;

    double split_ratio = 0.7;
    std::size_t split_bins = 10;

    GraphConfig graph;
    GsneConfig gsne;
    TextEmbedConfig text;
    ClipConfig clip;

    RegressorSpec lasso = RegressorSpec::defaults(RegressorKind::lasso);
    RegressorSpec enet = RegressorSpec::defaults(RegressorKind::elastic_net);
    RegressorSpec krr = RegressorSpec::defaults(RegressorKind::kernel_ridge);
    RegressorSpec gbm = RegressorSpec::defaults(RegressorKind::gradient_boosting);

    StreamMask fuse_streams{Stream::raw, Stream::geo_first, Stream::geo_second, Stream::text, Stream::image};
    RegressorKind fit_regressor = RegressorKind::gradient_boosting;
    std::vector<RegressorKind> ablate_regressors = {RegressorKind::lasso, RegressorKind::elastic_net,
                                                    RegressorKind::kernel_ridge, RegressorKind::gradient_boosting};
    bool ablate_stream_effects = false;

    /// Propagates the master seed into every module seed.
    void apply_seed(std::uint64_t master);
    const RegressorSpec& regressor(RegressorKind kind) const;
    AblationConfig ablation() const;
};

/// Defaults with the default master seed applied.
RunConfig default_config();

/// Overlays `key = value` lines onto the defaults. '#' starts a comment.
/// Throws FormatError naming the line for unknown keys, duplicate keys and
/// values that do not parse.
RunConfig parse_config_text(std::string_view text, std::string_view source = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// Every key with its current value, sorted by key.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);
/// Documented keys in sorted order.
std::vector<std::string> config_keys();

/// FNV-1a over the canonical entries, excluding input paths, as 16 hex digits.
std::string config_hash(const RunConfig& config);

}  // namespace mhpp
