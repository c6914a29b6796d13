#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mhpp/numerics.hpp"

namespace mhpp {

using Json = nlohmann::json;

/// Version of the shared weight-dump format. A dump is a JSON object
/// {"format": "mhpp-model", "version": N, "kind": <model kind>, ...}; every
/// matrix is stored as {"rows", "cols", "data"} with shortest round-trip
/// decimals, so save/load is bit-exact.
inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kToolVersion = "0.1.0";

Json matrix_to_json(const DenseMatrix& m);
DenseMatrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json standardizer_to_json(const Standardizer& s);
Standardizer standardizer_from_json(const Json& j);
Json pca_to_json(const PcaModel& p);
PcaModel pca_from_json(const Json& j);

/// Builds the envelope for a model dump of the given kind.
Json model_envelope(std::string_view kind);
/// Checks format, version and kind; throws FormatError on mismatch.
void check_envelope(const Json& j, std::string_view kind);

void write_json(const std::filesystem::path& path, const Json& j);
Json read_json(const std::filesystem::path& path);

}  // namespace mhpp
