#include "mhpp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mhpp/csv.hpp"
#include "mhpp/error.hpp"

namespace mhpp {

const std::array<std::string_view, kRawFeatureCount> kRawFeatureNames = {
    "bedrooms",         "bathrooms",         "parking",         "property_type",
    "transaction_date", "agency",            "latitude",        "longitude",
    "air_conditioning", "alarm",             "balcony",         "bbq",
    "city_view",        "adjacent_schools",  "adjacent_shops",  "adjacent_transport",
    "courtyard",        "dining_rooms",      "dish_wash",       "ducted",
    "ensuite",          "family_room",       "fireplace",       "fully_fenced",
    "gas_heating",      "gym",               "heating",         "intercom",
    "laundry",          "mountain",          "park",            "swimming_pool",
    "renovated",        "river_view",        "rumpus_room",     "sauna",
    "study_rooms",      "sunroom",           "system_heating",  "tennis_court",
    "water_views",      "wardrobe",          "total_additional_features",
};

bool is_amenity_feature(std::size_t index) {
    return index >= 8 && index < feature::kTotalAdditional && index != feature::kDiningRooms &&
           index != feature::kStudyRooms;
}

std::string_view to_string(PoiKind kind) {
    switch (kind) {
        case PoiKind::region: return "region";
        case PoiKind::school: return "school";
        case PoiKind::train_station: return "train_station";
    }
    return "region";
}

std::optional<PoiKind> poi_kind_from_string(std::string_view s) {
    if (s == "region") return PoiKind::region;
    if (s == "school") return PoiKind::school;
    if (s == "train_station") return PoiKind::train_station;
    return std::nullopt;
}

std::size_t poi_attribute_count(PoiKind kind) { return kind == PoiKind::region ? 3 : 2; }

// ---------------------------------------------------------------------------

std::vector<std::string> listing_header() {
    std::vector<std::string> h = {"id", "lat", "lon", "price", "description", "images"};
    for (const auto name : kRawFeatureNames) h.emplace_back(name);
    return h;
}

namespace {

constexpr std::size_t kListingLeadColumns = 6;

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

void write_comment(std::ostream& out, std::string_view comment) {
    if (!comment.empty()) out << "# " << comment << '\n';
}

double require_number(const std::string& field, std::string_view column) {
    const auto v = csv::parse_double(field);
    if (!v || !std::isfinite(*v)) {
        throw FormatError("column '" + std::string(column) + "': not a number: '" + field + "'");
    }
    return *v;
}

}  // namespace

ListingLoadResult load_listings(const std::filesystem::path& path) {
    auto in = open_input(path);
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header) throw FormatError("'" + path.string() + "': empty listing file");
    const auto expected = listing_header();
    if (header->fields != expected) {
        const std::size_t got = header->fields.size() >= kListingLeadColumns
                                    ? header->fields.size() - kListingLeadColumns
                                    : 0;
        throw FormatError("'" + path.string() + "' line " + std::to_string(header->line) +
                          ": header does not match the listing schema (" + std::to_string(got) +
                          " feature columns, expected " + std::to_string(kRawFeatureCount) +
                          " in documented order)");
    }
    const auto base_dir = path.parent_path();

    ListingLoadResult result;
    while (auto rec = reader.next()) {
        try {
            const auto& f = rec->fields;
            if (f.size() != expected.size()) {
                throw FormatError("expected " + std::to_string(expected.size()) + " fields, got " +
                                  std::to_string(f.size()));
            }
            Listing l;
            l.id = f[0];
            if (l.id.empty()) throw FormatError("empty id");
            l.latitude = require_number(f[1], "lat");
            l.longitude = require_number(f[2], "lon");
            if (l.latitude < -90.0 || l.latitude > 90.0) throw FormatError("latitude out of range");
            if (l.longitude < -180.0 || l.longitude > 180.0) {
                throw FormatError("longitude out of range");
            }
            const auto price = csv::parse_double(f[3]);
            if (!price) throw FormatError("missing price");
            if (!(*price > 0.0) || !std::isfinite(*price)) {
                throw FormatError("non-positive price " + f[3]);
            }
            l.price = *price;
            l.log_price = std::log(l.price);
            l.description = f[4];
            if (!csv::trim(f[5]).empty()) l.image_paths = csv::split(f[5], ';');
            if (l.image_paths.size() > kCollageTiles) {
                throw FormatError("more than " + std::to_string(kCollageTiles) + " images");
            }
            for (const auto& p : l.image_paths) l.images.push_back(load_ppm(base_dir / p));
            for (std::size_t j = 0; j < kRawFeatureCount; ++j) {
                l.raw_features[j] = require_number(f[kListingLeadColumns + j], kRawFeatureNames[j]);
            }
            result.listings.push_back(std::move(l));
        } catch (const Error& e) {
            result.rejected.push_back({rec->line, e.what()});
        }
    }
    return result;
}

void save_listings(const std::filesystem::path& path, std::span<const Listing> listings,
                   std::string_view image_dir, std::string_view header_comment) {
    auto out = open_output(path);
    write_comment(out, header_comment);
    csv::write_row(out, listing_header());
    const auto base_dir = path.parent_path();
    for (const auto& l : listings) {
        std::vector<std::string> row = {l.id, csv::format_double(l.latitude),
                                        csv::format_double(l.longitude),
                                        csv::format_double(l.price), l.description};
        std::string refs;
        for (std::size_t k = 0; k < l.images.size(); ++k) {
            const std::string rel = std::string(image_dir) + "/" + l.id + "_" + std::to_string(k) + ".ppm";
            save_ppm(base_dir / rel, l.images[k], header_comment);
            if (k) refs.push_back(';');
            refs += rel;
        }
        row.push_back(refs);
        for (const double v : l.raw_features) row.push_back(csv::format_double(v));
        csv::write_row(out, row);
    }
}

std::vector<Poi> load_pois(const std::filesystem::path& path) {
    auto in = open_input(path);
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header || header->fields.size() != 4 + kMaxPoiAttributes || header->fields[0] != "id" ||
        header->fields[1] != "kind" || header->fields[2] != "lat" || header->fields[3] != "lon") {
        throw FormatError("'" + path.string() + "': POI header must be id,kind,lat,lon,attr_1..attr_" +
                          std::to_string(kMaxPoiAttributes));
    }
    std::vector<Poi> pois;
    while (auto rec = reader.next()) {
        const auto where = "'" + path.string() + "' line " + std::to_string(rec->line) + ": ";
        const auto& f = rec->fields;
        if (f.size() != header->fields.size()) throw FormatError(where + "wrong field count");
        Poi p;
        p.id = f[0];
        const auto kind = poi_kind_from_string(f[1]);
        if (!kind) throw FormatError(where + "unknown POI kind '" + f[1] + "'");
        p.kind = *kind;
        try {
            p.latitude = require_number(f[2], "lat");
            p.longitude = require_number(f[3], "lon");
            const std::size_t count = poi_attribute_count(p.kind);
            for (std::size_t a = 0; a < kMaxPoiAttributes; ++a) {
                const auto& cell = f[4 + a];
                if (a < count) {
                    p.attributes.push_back(require_number(cell, "attr_" + std::to_string(a + 1)));
                } else if (!csv::trim(cell).empty()) {
                    throw FormatError("unexpected attribute for kind " + f[1]);
                }
            }
        } catch (const FormatError& e) {
            throw FormatError(where + e.what());
        }
        pois.push_back(std::move(p));
    }
    return pois;
}

void save_pois(const std::filesystem::path& path, std::span<const Poi> pois,
               std::string_view header_comment) {
    auto out = open_output(path);
    write_comment(out, header_comment);
    std::vector<std::string> header = {"id", "kind", "lat", "lon"};
    for (std::size_t a = 0; a < kMaxPoiAttributes; ++a) header.push_back("attr_" + std::to_string(a + 1));
    csv::write_row(out, header);
    for (const auto& p : pois) {
        std::vector<std::string> row = {p.id, std::string(to_string(p.kind)),
                                        csv::format_double(p.latitude),
                                        csv::format_double(p.longitude)};
        for (std::size_t a = 0; a < kMaxPoiAttributes; ++a) {
            row.push_back(a < p.attributes.size() ? csv::format_double(p.attributes[a]) : "");
        }
        csv::write_row(out, row);
    }
}

// ---------------------------------------------------------------------------
// PPM

RasterImage decode_ppm(std::string_view bytes) {
    std::size_t pos = 0;
    auto skip_space_and_comments = [&] {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* what) {
        skip_space_and_comments();
        std::size_t v = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
            v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
            ++pos;
            if (++digits > 9) throw FormatError(std::string("ppm: ") + what + " too large");
        }
        if (digits == 0) throw FormatError(std::string("ppm: missing ") + what);
        return v;
    };

    if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("ppm: not a portable pixmap");
    if (bytes[1] != '6') {
        throw FormatError(std::string("ppm: unsupported format 'P") + bytes[1] + "' (only P6)");
    }
    pos = 2;
    const std::size_t width = read_uint("width");
    const std::size_t height = read_uint("height");
    const std::size_t maxval = read_uint("maxval");
    if (maxval != 255) throw FormatError("ppm: maxval " + std::to_string(maxval) + " != 255");
    if (pos >= bytes.size()) throw FormatError("ppm: truncated header");
    ++pos;  // single whitespace byte before the raster

    RasterImage img(width, height);
    const std::size_t need = img.pixels.size();
    if (bytes.size() - pos < need) {
        throw FormatError("ppm: truncated payload (" + std::to_string(bytes.size() - pos) + " of " +
                          std::to_string(need) + " bytes)");
    }
    std::copy_n(bytes.data() + pos, need, reinterpret_cast<char*>(img.pixels.data()));
    return img;
}

RasterImage load_ppm(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return decode_ppm(buf.str());
    } catch (const FormatError& e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }
}

std::string encode_ppm(const RasterImage& image, std::string_view comment) {
    std::string out = "P6\n";
    if (!comment.empty()) out += "# " + std::string(comment) + "\n";
    out += std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
    return out;
}

void save_ppm(const std::filesystem::path& path, const RasterImage& image, std::string_view comment) {
    auto out = open_output(path);
    const auto bytes = encode_ppm(image, comment);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// ---------------------------------------------------------------------------

RasterImage resize_nearest(const RasterImage& image, std::size_t width, std::size_t height) {
    if (image.width == 0 || image.height == 0) throw DomainError("resize_nearest: empty image");
    RasterImage out(width, height);
    for (std::size_t y = 0; y < height; ++y) {
        const std::size_t sy = y * image.height / height;
        for (std::size_t x = 0; x < width; ++x) {
            const std::size_t sx = x * image.width / width;
            std::copy_n(image.at(sx, sy), 3, out.at(x, y));
        }
    }
    return out;
}

RasterImage make_collage(std::span<const RasterImage> images, std::size_t tile) {
    if (images.empty()) throw DomainError("make_collage: at least one image is required");
    if (tile == 0) throw DomainError("make_collage: tile must be positive");
    RasterImage out(kCollageTiles * tile, tile);
    for (std::size_t t = 0; t < kCollageTiles; ++t) {
        const RasterImage& src = t < images.size() ? images[t] : images[0];
        const RasterImage resized = resize_nearest(src, tile, tile);
        for (std::size_t y = 0; y < tile; ++y) {
            std::copy_n(resized.at(0, y), 3 * tile, out.at(t * tile, y));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> SplitIndices::train_ids(const Corpus& corpus) const {
    std::vector<std::string> ids;
    for (const auto i : train) ids.push_back(corpus.listings[i].id);
    return ids;
}

std::vector<std::string> SplitIndices::test_ids(const Corpus& corpus) const {
    std::vector<std::string> ids;
    for (const auto i : test) ids.push_back(corpus.listings[i].id);
    return ids;
}

SplitIndices stratified_split(std::span<const Listing> listings, double ratio, std::size_t bins,
                              std::uint64_t seed) {
    if (listings.empty()) throw DomainError("stratified_split: empty corpus");
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("stratified_split: ratio must be in (0, 1)");
    if (bins == 0 || bins > listings.size()) {
        throw DomainError("stratified_split: need 1 <= bins <= listing count");
    }
    const std::size_t n = listings.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return listings[a].log_price < listings[b].log_price;
    });

    Rng rng(seed);
    SplitIndices split;
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * n / bins;
        const std::size_t hi = (b + 1) * n / bins;
        std::vector<std::size_t> stratum(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                         order.begin() + static_cast<std::ptrdiff_t>(hi));
        rng.shuffle(std::span<std::size_t>(stratum));
        const auto take = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(stratum.size())));
        for (std::size_t k = 0; k < stratum.size(); ++k) {
            (k < take ? split.train : split.test).push_back(stratum[k]);
        }
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace mhpp
