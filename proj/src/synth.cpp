#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "mhpp/dataset.hpp"
#include "mhpp/error.hpp"
#include "mhpp/geograph.hpp"

namespace mhpp {
namespace {

using Rgb = std::array<double, 3>;

struct Swatch {
    std::string_view word;
    Rgb color;
};

constexpr std::array<Swatch, 6> kRoofs = {{{"terracotta", {180, 80, 50}},
                                           {"slate", {70, 80, 100}},
                                           {"copper", {200, 120, 40}},
                                           {"charcoal", {40, 40, 45}},
                                           {"silver", {190, 190, 200}},
                                           {"green", {40, 120, 70}}}};
constexpr std::array<Swatch, 6> kFacades = {{{"brick", {150, 60, 45}},
                                             {"cream", {235, 225, 190}},
                                             {"white", {245, 245, 245}},
                                             {"sandstone", {210, 180, 120}},
                                             {"bluestone", {90, 100, 120}},
                                             {"timber", {130, 90, 55}}}};
constexpr std::array<Swatch, 6> kGardens = {{{"lush", {40, 150, 50}},
                                             {"native", {110, 130, 60}},
                                             {"gravel", {150, 150, 140}},
                                             {"flowering", {200, 90, 160}},
                                             {"paved", {200, 195, 185}},
                                             {"lavender", {150, 120, 200}}}};

constexpr std::array<std::string_view, 8> kPositiveAdjectives = {
    "luxury", "premium", "stunning", "immaculate", "designer", "elegant", "superb", "bespoke"};
constexpr std::array<std::string_view, 6> kPositiveNouns = {
    "finishes", "appliances", "interiors", "joinery", "fittings", "stonework"};
constexpr std::array<std::string_view, 8> kNegativeAdjectives = {
    "dated", "tired", "worn", "original", "basic", "neglected", "faded", "cramped"};
constexpr std::array<std::string_view, 6> kNegativeNouns = {
    "carpets", "fixtures", "plumbing", "paintwork", "tiles", "wiring"};

constexpr std::array<std::string_view, 4> kIntros = {"introducing this", "welcome to this",
                                                    "presenting this", "discover this"};
constexpr std::array<std::string_view, 4> kPropertyTypes = {"house", "townhouse", "unit", "villa"};
constexpr std::array<std::string_view, 30> kSuburbs = {
    "carlton",    "fitzroy",   "richmond",  "brunswick",  "northcote", "kew",
    "hawthorn",   "camberwell", "prahran",  "windsor",    "elwood",    "brighton",
    "footscray",  "yarraville", "seddon",   "coburg",     "preston",   "thornbury",
    "ivanhoe",    "malvern",   "toorak",    "southbank",  "docklands", "collingwood",
    "abbotsford", "burnley",   "ascot",     "flemington", "kensington", "williamstown"};
constexpr std::array<std::string_view, 20> kPlaces = {
    "cafes",    "parks",      "schools",   "transport",   "shops",      "trams",      "trains",
    "beaches",  "the river",  "markets",   "the library", "university", "the hospital",
    "freeways", "playgrounds", "bike paths", "restaurants", "boutiques", "the village",
    "sporting ovals"};
constexpr std::array<std::string_view, 8> kBlocks = {"generous", "compact", "corner", "north facing",
                                                    "deep",     "wide",    "large",  "modest"};
constexpr std::array<std::string_view, 8> kStreets = {"quiet",   "leafy",     "tree lined",
                                                     "popular", "wide",      "peaceful",
                                                     "family",  "sought after"};
constexpr std::array<std::string_view, 14> kExtras = {
    "ducted heating", "split system cooling", "ample storage", "a carport", "a double garage",
    "a separate laundry", "a home office", "a sunny deck", "a pergola", "built in wardrobes",
    "a garden shed", "polished floorboards", "high ceilings", "a powder room"};
constexpr std::array<std::string_view, 6> kBuyers = {"families", "investors", "couples",
                                                    "downsizers", "first home buyers",
                                                    "professionals"};

template <typename T, std::size_t N>
const T& pick(const std::array<T, N>& items, Rng& rng) {
    return items[static_cast<std::size_t>(rng.uniform_index(N))];
}

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

/// Exterior: roof, facade and garden bands.
RasterImage exterior_image(std::size_t size, const Rgb& roof, const Rgb& facade, const Rgb& garden,
                           Rng& rng) {
    RasterImage img(size, size);
    for (std::size_t y = 0; y < size; ++y) {
        const Rgb& c = y < size / 3 ? roof : (y < 2 * size / 3 ? facade : garden);
        for (std::size_t x = 0; x < size; ++x) {
            auto* px = img.at(x, y);
            for (int ch = 0; ch < 3; ++ch) px[ch] = to_byte(c[ch] + rng.normal(0.0, 8.0));
        }
    }
    return img;
}

/// Interior: a tinted wall of the given luminance with random texture.
RasterImage interior_image(std::size_t size, double level, Rng& rng) {
    Rgb tint = {1.0 + rng.normal(0.0, 0.1), 1.0 + rng.normal(0.0, 0.1), 1.0 + rng.normal(0.0, 0.1)};
    const double lum = luminance(tint[0], tint[1], tint[2]);
    for (auto& t : tint) t = t * level / lum;
    const double texture = rng.uniform(4.0, 20.0);
    RasterImage img(size, size);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double shade = rng.normal(0.0, texture);
            auto* px = img.at(x, y);
            for (int ch = 0; ch < 3; ++ch) px[ch] = to_byte(tint[ch] + shade);
        }
    }
    return img;
}

double mean_luminance(const RasterImage& img) {
    double s = 0.0;
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
        s += luminance(img.pixels[i], img.pixels[i + 1], img.pixels[i + 2]);
    }
    return s / static_cast<double>(img.width * img.height);
}

std::array<double, kRawFeatureCount> raw_feature_weights() {
    std::array<double, kRawFeatureCount> w{};
    w[feature::kBedrooms] = 0.09;
    w[feature::kBathrooms] = 0.07;
    w[feature::kParking] = 0.03;
    w[feature::kPropertyType] = -0.04;
    w[feature::kTransactionDate] = 0.06;
    w[feature::kDiningRooms] = 0.02;
    w[feature::kStudyRooms] = 0.03;
    for (std::size_t j = 0; j < kRawFeatureCount; ++j) {
        if (!is_amenity_feature(j)) continue;
        // Spread of small amenity premiums, a few negative.
        const double frac = std::fmod(static_cast<double>(j) * 0.6180339887498949, 1.0);
        w[j] = -0.01 + 0.06 * frac;
    }
    return w;
}

double amenity_rate(std::size_t j) {
    return 0.15 + 0.4 * std::fmod(static_cast<double>(j) * 0.7548776662466927, 1.0);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Corpus synth_generate(std::size_t n, std::size_t m, std::uint64_t seed, const GeneratorConfig& cfg) {
    if (n < 10) throw DomainError("synth_generate: need at least 10 listings");
    if (m < 3) throw DomainError("synth_generate: need at least 3 POIs");

    Corpus corpus;
    corpus.provenance.source = Provenance::Source::synthetic;
    corpus.provenance.seed = seed;
    corpus.provenance.generator = cfg;
    corpus.provenance.raw_weights = raw_feature_weights();
    const auto& weights = corpus.provenance.raw_weights;

    constexpr double kRad = std::numbers::pi / 180.0;
    const double dlat = cfg.half_extent_m / (kRad * kEarthRadiusM);
    const double dlon = cfg.half_extent_m / (kRad * kEarthRadiusM * std::cos(cfg.center_latitude * kRad));

    Rng poi_rng(derive_seed(seed, "synth.pois"));
    std::array<std::size_t, 3> per_kind{};
    for (std::size_t i = 0; i < m; ++i) {
        Poi p;
        p.kind = static_cast<PoiKind>(i % 3);
        const char prefix = p.kind == PoiKind::region ? 'R' : (p.kind == PoiKind::school ? 'S' : 'T');
        char id[16];
        std::snprintf(id, sizeof id, "%c%04zu", prefix, per_kind[i % 3]++);
        p.id = id;
        p.latitude = cfg.center_latitude + poi_rng.uniform(-dlat, dlat);
        p.longitude = cfg.center_longitude + poi_rng.uniform(-dlon, dlon);
        for (std::size_t a = 0; a < poi_attribute_count(p.kind); ++a) p.attributes.push_back(poi_rng.normal());
        corpus.pois.push_back(std::move(p));
    }

    Rng rng(derive_seed(seed, "synth.listings"));
    std::vector<double> geo_raw(n);
    corpus.listings.resize(n);
    corpus.truth.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Listing& l = corpus.listings[i];
        SyntheticTruth& truth = corpus.truth[i];
        char id[24];
        std::snprintf(id, sizeof id, "L%05zu", i);
        l.id = id;
        l.latitude = cfg.center_latitude + rng.uniform(-dlat, dlat);
        l.longitude = cfg.center_longitude + rng.uniform(-dlon, dlon);

        auto& f = l.raw_features;
        double bedrooms = 1.0;
        for (int t = 0; t < 5; ++t) bedrooms += rng.bernoulli(0.45) ? 1.0 : 0.0;
        f[feature::kBedrooms] = bedrooms;
        f[feature::kBathrooms] =
            1.0 + static_cast<double>(rng.uniform_index(static_cast<std::uint64_t>(std::min(bedrooms, 3.0))));
        f[feature::kParking] = static_cast<double>(rng.uniform_index(4));
        f[feature::kPropertyType] = static_cast<double>(rng.uniform_index(4));
        f[feature::kTransactionDate] = 2013.0 + 3.0 * rng.uniform();
        f[feature::kAgency] = static_cast<double>(rng.uniform_index(20));
        f[feature::kLatitude] = l.latitude;
        f[feature::kLongitude] = l.longitude;
        double amenities = 0.0;
        for (std::size_t j = 0; j < kRawFeatureCount; ++j) {
            if (!is_amenity_feature(j)) continue;
            f[j] = rng.bernoulli(amenity_rate(j)) ? 1.0 : 0.0;
            amenities += f[j];
        }
        f[feature::kDiningRooms] = static_cast<double>(rng.uniform_index(3));
        f[feature::kStudyRooms] = static_cast<double>(rng.uniform_index(3));
        f[feature::kTotalAdditional] = amenities;

        double raw = 0.0;
        for (std::size_t j = 0; j < kRawFeatureCount; ++j) raw += weights[j] * f[j];
        truth.raw_effect = raw;

        // Geo: nearest POI of each kind.
        const GeoPosition here{l.latitude, l.longitude};
        std::array<double, 3> nearest_d = {1e300, 1e300, 1e300};
        std::array<const Poi*, 3> nearest{};
        for (const auto& p : corpus.pois) {
            const auto k = static_cast<std::size_t>(p.kind);
            const double d = planar_distance(here, {p.latitude, p.longitude});
            if (d < nearest_d[k]) {
                nearest_d[k] = d;
                nearest[k] = &p;
            }
        }
        geo_raw[i] = 0.5 * nearest[0]->attributes[0] +
                     0.5 * nearest[1]->attributes[0] * std::exp(-nearest_d[1] / 1500.0) +
                     0.6 * std::exp(-nearest_d[2] / 800.0);

        // Description with planted quality phrases and visual cues.
        const double text_latent = rng.normal();
        const auto& roof = pick(kRoofs, rng);
        const auto& facade = pick(kFacades, rng);
        const auto& garden = pick(kGardens, rng);
        std::string d = std::string(pick(kIntros, rng)) + " " +
                        std::to_string(static_cast<int>(bedrooms)) + " bedroom " +
                        std::string(kPropertyTypes[static_cast<std::size_t>(f[feature::kPropertyType])]) +
                        " in " + std::string(pick(kSuburbs, rng)) + ".";
        int positive = 0;
        const std::size_t fillers = 3 + static_cast<std::size_t>(rng.uniform_index(3));
        std::vector<std::string> sentences;
        for (std::size_t q = 0; q < cfg.quality_phrases; ++q) {
            if (rng.bernoulli(sigmoid(1.8 * text_latent))) {
                ++positive;
                sentences.push_back("boasting " + std::string(pick(kPositiveAdjectives, rng)) + " " +
                                    std::string(pick(kPositiveNouns, rng)) + ".");
            } else {
                sentences.push_back("with " + std::string(pick(kNegativeAdjectives, rng)) + " " +
                                    std::string(pick(kNegativeNouns, rng)) + ".");
            }
        }
        for (std::size_t s = 0; s < fillers; ++s) {
            switch (rng.uniform_index(5)) {
                case 0:
                    sentences.push_back("close to " + std::string(pick(kPlaces, rng)) + " and " +
                                        std::string(pick(kPlaces, rng)) + ".");
                    break;
                case 1:
                    sentences.push_back("set on a " + std::string(pick(kBlocks, rng)) + " block in a " +
                                        std::string(pick(kStreets, rng)) + " street.");
                    break;
                case 2:
                    sentences.push_back("features include " + std::string(pick(kExtras, rng)) + " and " +
                                        std::string(pick(kExtras, rng)) + ".");
                    break;
                case 3:
                    sentences.push_back("ideal for " + std::string(pick(kBuyers, rng)) + ".");
                    break;
                default:
                    sentences.push_back("only minutes from " + std::string(pick(kPlaces, rng)) + ".");
                    break;
            }
        }
        rng.shuffle(std::span<std::string>(sentences));
        for (const auto& s : sentences) d += " " + s;
        d += " the " + std::string(facade.word) + " facade sits beneath a " + std::string(roof.word) +
             " roof with a " + std::string(garden.word) + " garden.";
        l.description = std::move(d);
        truth.text_score = (2.0 * positive - static_cast<double>(cfg.quality_phrases)) /
                           static_cast<double>(cfg.quality_phrases);
        truth.text_effect = cfg.text_weight * truth.text_score;

        // Images: one exterior plus three or four interiors.
        const double image_latent = rng.normal();
        const double level = 128.0 + 40.0 * std::tanh(0.8 * image_latent);
        const std::size_t interiors = rng.bernoulli(cfg.four_image_fraction) ? 3 : 4;
        l.images.push_back(exterior_image(cfg.image_size, roof.color, facade.color, garden.color, rng));
        double lum = 0.0;
        for (std::size_t k = 0; k < interiors; ++k) {
            l.images.push_back(interior_image(cfg.image_size, level + rng.normal(0.0, 6.0), rng));
            lum += mean_luminance(l.images.back());
        }
        truth.image_score = (lum / static_cast<double>(interiors) - 128.0) / 40.0;
        truth.image_effect = cfg.image_weight * truth.image_score;
        truth.noise = rng.normal(0.0, cfg.noise_stddev);
    }

    double geo_mean = 0.0, geo_var = 0.0, raw_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        geo_mean += geo_raw[i];
        raw_mean += corpus.truth[i].raw_effect;
    }
    geo_mean /= static_cast<double>(n);
    raw_mean /= static_cast<double>(n);
    for (const double g : geo_raw) geo_var += (g - geo_mean) * (g - geo_mean);
    const double geo_sd = std::sqrt(geo_var / static_cast<double>(n));

    for (std::size_t i = 0; i < n; ++i) {
        auto& truth = corpus.truth[i];
        truth.raw_effect = cfg.raw_weight * (truth.raw_effect - raw_mean);
        truth.geo_effect = geo_sd > 0.0 ? cfg.geo_weight * (geo_raw[i] - geo_mean) / geo_sd : 0.0;
        const double log_price = cfg.base_log_price + truth.raw_effect + truth.geo_effect +
                                 truth.text_effect + truth.image_effect + truth.noise;
        auto& l = corpus.listings[i];
        l.price = std::max(100.0, std::round(std::exp(log_price) / 100.0) * 100.0);
        l.log_price = std::log(l.price);
    }
    return corpus;
}

}  // namespace mhpp
