#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mhpp/dataset.hpp"
#include "mhpp/numerics.hpp"

namespace mhpp {

/// Streams in fusion order.
enum class Stream { raw, geo_first, geo_second, text, image };
inline constexpr std::size_t kStreamCount = 5;

std::string_view to_string(Stream s);
Stream stream_from_string(std::string_view s);

class StreamMask {
public:
    StreamMask() = default;
    StreamMask(std::initializer_list<Stream> streams);

    bool has(Stream s) const noexcept { return flags_[static_cast<std::size_t>(s)]; }
    void set(Stream s, bool on = true) noexcept { flags_[static_cast<std::size_t>(s)] = on; }
    bool any() const noexcept;
    /// "raw+geo_first+..." in fusion order.
    std::string label() const;

    bool operator==(const StreamMask&) const = default;

private:
    std::array<bool, kStreamCount> flags_{};
};

/// One listing's vectors; unset entries are streams not computed.
using ListingStreams = std::array<std::optional<Vector>, kStreamCount>;

struct StreamSlice {
    Stream stream;
    std::size_t offset = 0;
    std::size_t length = 0;

    bool operator==(const StreamSlice&) const = default;
};

struct FusedVector {
    Vector values;
    std::vector<StreamSlice> layout;
};

/// Concatenates the enabled streams in fusion order.
FusedVector fuse(const ListingStreams& streams, const StreamMask& mask);

/// Fuses every listing; throws ShapeError when a stream length differs
/// between listings.
DenseMatrix fuse_rows(std::span<const ListingStreams> streams, const StreamMask& mask,
                      std::vector<StreamSlice>* layout = nullptr);

struct FusedDataset {
    DenseMatrix train;
    DenseMatrix test;
    Standardizer standardizer;  // fitted on train
    std::vector<StreamSlice> layout;
};

/// Fuses, then standardizes both splits with train statistics.
FusedDataset fuse_dataset(std::span<const ListingStreams> streams, const SplitIndices& split,
                          const StreamMask& mask);

/// "raw:0", "raw:1", ..., one per column.
std::vector<std::string> fused_column_names(std::span<const StreamSlice> layout);

struct FusedTable {
    std::vector<std::string> ids;
    std::vector<std::string> splits;  // "train" or "test"
    Vector targets;                   // log price
    std::vector<std::string> columns;
    DenseMatrix values;               // unstandardized
};

void save_fused_csv(const std::filesystem::path& path, const FusedTable& table, std::string_view header_comment = {});
FusedTable load_fused_csv(const std::filesystem::path& path);

}  // namespace mhpp
