#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mhpp/numerics.hpp"

namespace mhpp {

// ---------------------------------------------------------------------------
// Listing schema

inline constexpr std::size_t kRawFeatureCount = 43;

/// Column order of the raw house features in listing files. Counts are used
/// for bedrooms, bathrooms, parking, dining rooms and study rooms; amenities
/// are 0/1 flags; property type and agency are integer codes; transaction
/// date is a fractional year.
extern const std::array<std::string_view, kRawFeatureCount> kRawFeatureNames;

namespace feature {
inline constexpr std::size_t kBedrooms = 0;
inline constexpr std::size_t kBathrooms = 1;
inline constexpr std::size_t kParking = 2;
inline constexpr std::size_t kPropertyType = 3;
inline constexpr std::size_t kTransactionDate = 4;
inline constexpr std::size_t kAgency = 5;
inline constexpr std::size_t kLatitude = 6;
inline constexpr std::size_t kLongitude = 7;
inline constexpr std::size_t kDiningRooms = 17;
inline constexpr std::size_t kStudyRooms = 36;
inline constexpr std::size_t kTotalAdditional = 42;
}  // namespace feature

/// True for the 0/1 amenity columns.
bool is_amenity_feature(std::size_t index);

struct RasterImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // RGB triples, row-major

    RasterImage() = default;
    RasterImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0) {}

    std::uint8_t* at(std::size_t x, std::size_t y) { return pixels.data() + 3 * (y * width + x); }
    const std::uint8_t* at(std::size_t x, std::size_t y) const {
        return pixels.data() + 3 * (y * width + x);
    }
    bool operator==(const RasterImage&) const = default;
};

struct Listing {
    std::string id;
    std::array<double, kRawFeatureCount> raw_features{};
    double latitude = 0.0;
    double longitude = 0.0;
    std::string description;
    std::vector<RasterImage> images;        // at most five
    std::vector<std::string> image_paths;   // as referenced by the listing file
    double price = 0.0;
    double log_price = 0.0;
};

enum class PoiKind { region, school, train_station };

std::string_view to_string(PoiKind kind);
std::optional<PoiKind> poi_kind_from_string(std::string_view s);
/// Attribute count per kind: region {median_income, population_density,
/// green_space}; school {rating, enrolment}; train_station {daily_services, zone}.
std::size_t poi_attribute_count(PoiKind kind);
inline constexpr std::size_t kMaxPoiAttributes = 3;

struct Poi {
    std::string id;
    PoiKind kind = PoiKind::region;
    std::vector<double> attributes;
    double latitude = 0.0;
    double longitude = 0.0;
};

// ---------------------------------------------------------------------------
// Synthetic generator

struct GeneratorConfig {
    double center_latitude = -37.8136;
    double center_longitude = 144.9631;
    double half_extent_m = 4000.0;    // houses and POIs fall in a square of side 2x this
    double base_log_price = 13.3;
    double raw_weight = 1.0;          // multiplies the documented per-feature weights
    double geo_weight = 0.12;
    double text_weight = 0.35;
    double image_weight = 0.35;
    double noise_stddev = 0.05;
    std::size_t image_size = 24;      // generated images are square
    double four_image_fraction = 0.15;
    std::size_t quality_phrases = 6;
};

/// Per-listing effects planted by the generator, in log-price units.
struct SyntheticTruth {
    double raw_effect = 0.0;
    double geo_effect = 0.0;
    double text_score = 0.0;   // (positive - negative quality phrases) / phrases
    double text_effect = 0.0;
    double image_score = 0.0;  // standardized mean interior luminance
    double image_effect = 0.0;
    double noise = 0.0;
};

struct Provenance {
    enum class Source { loaded, synthetic };
    Source source = Source::loaded;
    std::uint64_t seed = 0;
    GeneratorConfig generator;
    std::array<double, kRawFeatureCount> raw_weights{};  // ground truth, synthetic only
};

struct Corpus {
    std::vector<Listing> listings;
    std::vector<Poi> pois;
    Provenance provenance;
    std::vector<SyntheticTruth> truth;  // parallel to listings when synthetic
};

Corpus synth_generate(std::size_t n, std::size_t m, std::uint64_t seed,
                      const GeneratorConfig& config = {});

// ---------------------------------------------------------------------------
// Files

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ListingLoadResult {
    std::vector<Listing> listings;
    std::vector<RowError> rejected;
};

/// Expected header of a listing file.
std::vector<std::string> listing_header();

/// Reads a listing CSV. Image paths are resolved relative to the file's
/// directory and decoded eagerly. Rows with bad values are rejected and
/// reported; a malformed header throws FormatError.
ListingLoadResult load_listings(const std::filesystem::path& path);
/// Writes listings, and their images as PPM files under `image_dir`
/// (relative to the listing file's directory).
void save_listings(const std::filesystem::path& path, std::span<const Listing> listings,
                   std::string_view image_dir = "images", std::string_view header_comment = {});

std::vector<Poi> load_pois(const std::filesystem::path& path);
void save_pois(const std::filesystem::path& path, std::span<const Poi> pois,
               std::string_view header_comment = {});

/// Binary P6 with maxval 255; '#' comments in the header are allowed.
RasterImage load_ppm(const std::filesystem::path& path);
RasterImage decode_ppm(std::string_view bytes);
std::string encode_ppm(const RasterImage& image, std::string_view comment = {});
void save_ppm(const std::filesystem::path& path, const RasterImage& image,
              std::string_view comment = {});

// ---------------------------------------------------------------------------

inline constexpr std::size_t kCollageTiles = 5;

/// Nearest-neighbour resize of each image to tile x tile, laid out in a 1x5
/// strip. Fewer than five images: the first image fills the missing tiles.
/// More than five: the first five are used.
RasterImage make_collage(std::span<const RasterImage> images, std::size_t tile);

RasterImage resize_nearest(const RasterImage& image, std::size_t width, std::size_t height);

struct SplitIndices {
    std::vector<std::size_t> train;  // indices into Corpus::listings, ascending
    std::vector<std::size_t> test;

    std::vector<std::string> train_ids(const Corpus& corpus) const;
    std::vector<std::string> test_ids(const Corpus& corpus) const;
};

/// Bins listings into `bins` log-price quantile strata and sends round(ratio *
/// stratum size) of each stratum, chosen uniformly at random, to train.
SplitIndices stratified_split(std::span<const Listing> listings, double ratio, std::size_t bins,
                              std::uint64_t seed);

}  // namespace mhpp
