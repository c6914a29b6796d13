#include "mhpp/fusion.hpp"

#include <fstream>

#include "mhpp/csv.hpp"
#include "mhpp/error.hpp"

namespace mhpp {
namespace {

constexpr std::array<std::string_view, kStreamCount> kStreamNames = {"raw", "geo_first", "geo_second", "text",
                                                                     "image"};

}  // namespace

std::string_view to_string(Stream s) { return kStreamNames[static_cast<std::size_t>(s)]; }

Stream stream_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kStreamCount; ++i) {
        if (kStreamNames[i] == s) return static_cast<Stream>(i);
    }
    throw DomainError("unknown stream '" + std::string(s) + "'");
}

StreamMask::StreamMask(std::initializer_list<Stream> streams) {
    for (const auto s : streams) set(s);
}

bool StreamMask::any() const noexcept {
    for (const bool f : flags_) {
        if (f) return true;
    }
    return false;
}

std::string StreamMask::label() const {
    std::string out;
    for (std::size_t i = 0; i < kStreamCount; ++i) {
        if (!flags_[i]) continue;
        if (!out.empty()) out += '+';
        out += kStreamNames[i];
    }
    return out;
}

FusedVector fuse(const ListingStreams& streams, const StreamMask& mask) {
    if (!mask.any()) throw DomainError("fuse: stream mask is empty");
    FusedVector out;
    for (std::size_t i = 0; i < kStreamCount; ++i) {
        const auto s = static_cast<Stream>(i);
        if (!mask.has(s)) continue;
        if (!streams[i]) throw DomainError("fuse: enabled stream '" + std::string(to_string(s)) + "' is missing");
        out.layout.push_back({s, out.values.size(), streams[i]->size()});
        out.values.insert(out.values.end(), streams[i]->begin(), streams[i]->end());
    }
    return out;
}

DenseMatrix fuse_rows(std::span<const ListingStreams> streams, const StreamMask& mask,
                      std::vector<StreamSlice>* layout) {
    if (streams.empty()) throw DomainError("fuse_rows: no listings");
    auto first = fuse(streams[0], mask);
    DenseMatrix out(streams.size(), first.values.size());
    std::copy(first.values.begin(), first.values.end(), out.row(0).begin());
    for (std::size_t r = 1; r < streams.size(); ++r) {
        const auto f = fuse(streams[r], mask);
        if (f.layout != first.layout) {
            throw ShapeError("fuse_rows: stream lengths of listing " + std::to_string(r) +
                             " differ from the first listing");
        }
        std::copy(f.values.begin(), f.values.end(), out.row(r).begin());
    }
    if (layout) *layout = std::move(first.layout);
    return out;
}

FusedDataset fuse_dataset(std::span<const ListingStreams> streams, const SplitIndices& split,
                          const StreamMask& mask) {
    std::vector<ListingStreams> train, test;
    train.reserve(split.train.size());
    test.reserve(split.test.size());
    for (const auto i : split.train) train.push_back(streams[i]);
    for (const auto i : split.test) test.push_back(streams[i]);
    FusedDataset out;
    const auto raw_train = fuse_rows(train, mask, &out.layout);
    DenseMatrix raw_test(0, raw_train.cols());
    if (!test.empty()) {
        std::vector<StreamSlice> test_layout;
        raw_test = fuse_rows(test, mask, &test_layout);
        if (test_layout != out.layout) throw ShapeError("fuse_dataset: train and test layouts differ");
    }
    out.standardizer = standardizer_fit(raw_train);
    out.train = out.standardizer.apply(raw_train);
    out.test = out.standardizer.apply(raw_test);
    return out;
}

std::vector<std::string> fused_column_names(std::span<const StreamSlice> layout) {
    std::vector<std::string> names;
    for (const auto& s : layout) {
        for (std::size_t k = 0; k < s.length; ++k) names.push_back(std::string(to_string(s.stream)) + ":" + std::to_string(k));
    }
    return names;
}

void save_fused_csv(const std::filesystem::path& path, const FusedTable& table, std::string_view header_comment) {
    const auto n = table.values.rows();
    if (table.ids.size() != n || table.splits.size() != n || table.targets.size() != n ||
        table.columns.size() != table.values.cols()) {
        throw ShapeError("save_fused_csv: table parts disagree in size");
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    std::vector<std::string> row{"id", "split", "log_price"};
    row.insert(row.end(), table.columns.begin(), table.columns.end());
    csv::write_row(out, row);
    for (std::size_t r = 0; r < n; ++r) {
        row.assign({table.ids[r], table.splits[r], csv::format_double(table.targets[r])});
        for (const double v : table.values.row(r)) row.push_back(csv::format_double(v));
        csv::write_row(out, row);
    }
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

FusedTable load_fused_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    csv::Reader reader(in);
    const auto header = reader.next();
    if (!header || header->fields.size() < 4 || header->fields[0] != "id" || header->fields[1] != "split" ||
        header->fields[2] != "log_price") {
        throw FormatError(path.string() + ": not a fused feature table");
    }
    FusedTable t;
    t.columns.assign(header->fields.begin() + 3, header->fields.end());
    std::vector<double> values;
    while (auto rec = reader.next()) {
        if (rec->fields.size() != header->fields.size()) {
            throw FormatError(path.string() + ":" + std::to_string(rec->line) + ": expected " +
                              std::to_string(header->fields.size()) + " fields");
        }
        t.ids.push_back(rec->fields[0]);
        if (rec->fields[1] != "train" && rec->fields[1] != "test") {
            throw FormatError(path.string() + ":" + std::to_string(rec->line) + ": split must be train or test");
        }
        t.splits.push_back(rec->fields[1]);
        for (std::size_t k = 2; k < rec->fields.size(); ++k) {
            const auto v = csv::parse_double(rec->fields[k]);
            if (!v) throw FormatError(path.string() + ":" + std::to_string(rec->line) + ": bad number '" + rec->fields[k] + "'");
            if (k == 2) {
                t.targets.push_back(*v);
            } else {
                values.push_back(*v);
            }
        }
    }
    t.values = DenseMatrix(t.ids.size(), t.columns.size(), std::move(values));
    return t;
}

}  // namespace mhpp
