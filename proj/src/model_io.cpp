#include "mhpp/model_io.hpp"

#include <fstream>

#include "mhpp/error.hpp"

namespace mhpp {

Json matrix_to_json(const DenseMatrix& m) {
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

DenseMatrix matrix_from_json(const Json& j) {
    try {
        return DenseMatrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                           j.at("data").get<std::vector<double>>());
    } catch (const Json::exception& e) {
        throw FormatError(std::string("matrix dump: ") + e.what());
    }
}

Json vector_to_json(const Vector& v) { return Json(v); }

Vector vector_from_json(const Json& j) {
    try {
        return j.get<Vector>();
    } catch (const Json::exception& e) {
        throw FormatError(std::string("vector dump: ") + e.what());
    }
}

Json standardizer_to_json(const Standardizer& s) {
    return Json{{"mean", s.mean}, {"scale", s.scale}};
}

Standardizer standardizer_from_json(const Json& j) {
    Standardizer s;
    s.mean = vector_from_json(j.at("mean"));
    s.scale = vector_from_json(j.at("scale"));
    if (s.mean.size() != s.scale.size()) throw FormatError("standardizer dump: length mismatch");
    return s;
}

Json pca_to_json(const PcaModel& p) {
    return Json{{"mean", p.mean},
                {"components", matrix_to_json(p.components)},
                {"eigenvalues", p.eigenvalues}};
}

PcaModel pca_from_json(const Json& j) {
    PcaModel p;
    p.mean = vector_from_json(j.at("mean"));
    p.components = matrix_from_json(j.at("components"));
    p.eigenvalues = vector_from_json(j.at("eigenvalues"));
    if (p.components.cols() != p.mean.size() || p.components.rows() != p.eigenvalues.size()) {
        throw FormatError("pca dump: inconsistent shapes");
    }
    return p;
}

Json model_envelope(std::string_view kind) {
    return Json{{"format", "mhpp-model"},
                {"version", kModelFormatVersion},
                {"tool_version", std::string(kToolVersion)},
                {"kind", std::string(kind)}};
}

void check_envelope(const Json& j, std::string_view kind) {
    if (!j.is_object() || j.value("format", "") != "mhpp-model") {
        throw FormatError("not an mhpp model dump");
    }
    if (j.value("version", -1) != kModelFormatVersion) {
        throw FormatError("unsupported model dump version");
    }
    if (j.value("kind", "") != kind) {
        throw FormatError("model dump kind '" + j.value("kind", "") + "' != expected '" +
                          std::string(kind) + "'");
    }
}

void write_json(const std::filesystem::path& path, const Json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << j.dump(1) << '\n';
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }
}

}  // namespace mhpp
