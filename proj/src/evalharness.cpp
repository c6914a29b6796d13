#include "mhpp/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mhpp/csv.hpp"
#include "mhpp/error.hpp"

namespace mhpp {
namespace {

void check_pair(std::span<const double> truth, std::span<const double> predictions) {
    if (truth.empty()) throw DomainError("metric: empty input");
    if (truth.size() != predictions.size()) {
        throw ShapeError("metric: " + std::to_string(truth.size()) + " targets but " +
                         std::to_string(predictions.size()) + " predictions");
    }
}

std::string fixed2(double v) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(2);
    s << v;
    return s.str();
}

StreamMask with_stream(StreamMask m, Stream s) {
    m.set(s);
    return m;
}

Json mask_to_json(const StreamMask& m) {
    Json a = Json::array();
    for (std::size_t i = 0; i < kStreamCount; ++i) {
        if (m.has(static_cast<Stream>(i))) a.push_back(std::string(to_string(static_cast<Stream>(i))));
    }
    return a;
}

StreamMask mask_from_json(const Json& j) {
    StreamMask m;
    for (const auto& s : j) m.set(stream_from_string(s.get<std::string>()));
    return m;
}

}  // namespace

double mae(std::span<const double> truth, std::span<const double> predictions) {
    check_pair(truth, predictions);
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - predictions[i]);
    return s / static_cast<double>(truth.size());
}

double rmse(std::span<const double> truth, std::span<const double> predictions) {
    check_pair(truth, predictions);
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - predictions[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(truth.size()));
}

MetricReport evaluate(std::span<const double> truth, std::span<const double> predictions) {
    return {mae(truth, predictions), rmse(truth, predictions), truth.size()};
}

double improvement_percent(double base, double method) {
    if (base == 0.0) throw DomainError("improvement: baseline metric is zero");
    return 100.0 * (base - method) / base;
}

const std::vector<Combo>& ablation_combos() {
    using S = Stream;
    static const std::vector<Combo> combos = [] {
        const std::vector<StreamMask> masks = {
            {S::raw},
            {S::raw, S::geo_first},
            {S::raw, S::geo_second},
            {S::raw, S::geo_first, S::geo_second},
            {S::raw, S::geo_first, S::geo_second, S::text},
            {S::raw, S::geo_first, S::geo_second, S::image},
            {S::raw, S::geo_first, S::geo_second, S::text, S::image},
        };
        std::vector<Combo> out;
        for (std::size_t i = 0; i < masks.size(); ++i) {
            out.push_back({static_cast<int>(i + 1), mask_name(masks[i]), masks[i]});
        }
        return out;
    }();
    return combos;
}

int combo_id(const StreamMask& mask) {
    for (const auto& c : ablation_combos()) {
        if (c.mask == mask) return c.id;
    }
    return 0;
}

std::string mask_name(const StreamMask& mask) {
    static constexpr std::array<std::string_view, kStreamCount> names = {"Raw", "first", "second", "text", "image"};
    std::string out;
    for (std::size_t i = 0; i < kStreamCount; ++i) {
        if (!mask.has(static_cast<Stream>(i))) continue;
        if (!out.empty()) out += '+';
        out += names[i];
    }
    return out;
}

const GridCell* AblationGrid::find(const StreamMask& mask, RegressorKind regressor) const {
    for (const auto& c : cells) {
        if (c.mask == mask && c.regressor == regressor) return &c;
    }
    return nullptr;
}

const GridCell& AblationGrid::at(const StreamMask& mask, RegressorKind regressor) const {
    const auto* c = find(mask, regressor);
    if (!c) {
        throw DomainError("ablation grid has no cell for " + mask_name(mask) + " / " + std::string(to_string(regressor)));
    }
    return *c;
}

const GridCell& AblationGrid::at(int combo, RegressorKind regressor) const {
    for (const auto& c : ablation_combos()) {
        if (c.id == combo) return at(c.mask, regressor);
    }
    throw DomainError("unknown combo " + std::to_string(combo));
}

std::vector<ImprovementCell> improvement_table(const AblationGrid& grid, int baseline_combo) {
    std::vector<ImprovementCell> out;
    for (const auto& combo : ablation_combos()) {
        if (combo.id == baseline_combo) continue;
        for (const auto r : grid.regressors) {
            const auto* cell = grid.find(combo.mask, r);
            if (!cell) continue;
            const auto& base = grid.at(baseline_combo, r).metrics;
            out.push_back({combo.id, r, improvement_percent(base.mae, cell->metrics.mae),
                           improvement_percent(base.rmse, cell->metrics.rmse)});
        }
    }
    return out;
}

std::vector<StreamMask> stream_effect_bases(Stream stream) {
    using S = Stream;
    if (stream == S::text) {
        return {{S::raw},
                {S::raw, S::geo_first},
                {S::raw, S::geo_second},
                {S::raw, S::geo_first, S::geo_second},
                {S::raw, S::geo_first, S::geo_second, S::image}};
    }
    if (stream == S::image) {
        return {{S::raw},
                {S::raw, S::geo_first},
                {S::raw, S::geo_second},
                {S::raw, S::text},
                {S::raw, S::geo_first, S::geo_second},
                {S::raw, S::geo_first, S::geo_second, S::text}};
    }
    throw DomainError("stream-effect tables exist for text and image only");
}

StreamEffectTable stream_effect_table(const AblationGrid& grid, Stream stream) {
    StreamEffectTable t;
    t.stream = stream;
    const std::size_t R = grid.regressors.size();
    t.average_mae_percent.assign(R, 0.0);
    t.average_rmse_percent.assign(R, 0.0);
    for (const auto& base : stream_effect_bases(stream)) {
        StreamEffectRow row{base, with_stream(base, stream), {}, {}};
        for (std::size_t r = 0; r < R; ++r) {
            const auto& a = grid.at(row.without, grid.regressors[r]).metrics;
            const auto& b = grid.at(row.with, grid.regressors[r]).metrics;
            row.mae_percent.push_back(improvement_percent(a.mae, b.mae));
            row.rmse_percent.push_back(improvement_percent(a.rmse, b.rmse));
            t.average_mae_percent[r] += row.mae_percent.back();
            t.average_rmse_percent[r] += row.rmse_percent.back();
        }
        t.rows.push_back(std::move(row));
    }
    for (std::size_t r = 0; r < R; ++r) {
        t.average_mae_percent[r] /= static_cast<double>(t.rows.size());
        t.average_rmse_percent[r] /= static_cast<double>(t.rows.size());
    }
    return t;
}

std::vector<StreamMask> ablation_masks(bool stream_effects) {
    std::vector<StreamMask> masks;
    for (const auto& c : ablation_combos()) masks.push_back(c.mask);
    if (stream_effects) {
        for (const auto s : {Stream::text, Stream::image}) {
            for (const auto& base : stream_effect_bases(s)) {
                for (const auto& m : {base, with_stream(base, s)}) {
                    if (std::find(masks.begin(), masks.end(), m) == masks.end()) masks.push_back(m);
                }
            }
        }
    }
    return masks;
}

AblationResult run_ablation(std::span<const ListingStreams> streams, std::span<const double> targets,
                            const SplitIndices& split, const AblationConfig& config) {
    if (streams.size() != targets.size()) throw ShapeError("run_ablation: streams and targets differ in length");
    if (split.train.empty() || split.test.empty()) throw DomainError("run_ablation: both splits must be non-empty");
    if (config.regressors.empty()) throw DomainError("run_ablation: no regressors configured");
    Vector y_train, y_test;
    for (const auto i : split.train) y_train.push_back(targets[i]);
    for (const auto i : split.test) y_test.push_back(targets[i]);

    AblationResult result;
    for (const auto& spec : config.regressors) {
        if (std::find(result.grid.regressors.begin(), result.grid.regressors.end(), spec.kind) !=
            result.grid.regressors.end()) {
            throw DomainError("run_ablation: regressor '" + std::string(to_string(spec.kind)) + "' listed twice");
        }
        result.grid.regressors.push_back(spec.kind);
    }
    for (const auto& mask : ablation_masks(config.stream_effects)) {
        const auto data = fuse_dataset(streams, split, mask);
        for (const auto& spec : config.regressors) {
            const auto model = fit(spec, data.train, y_train);
            const auto pred = predict(model, data.test);
            result.grid.cells.push_back({mask, spec.kind, evaluate(y_test, pred)});
        }
    }
    result.improvement = improvement_table(result.grid);
    if (config.stream_effects) {
        result.stream_effects.push_back(stream_effect_table(result.grid, Stream::text));
        result.stream_effects.push_back(stream_effect_table(result.grid, Stream::image));
    }
    return result;
}

Json ablation_to_json(const AblationResult& result, std::string_view provenance) {
    Json j;
    j["provenance"] = std::string(provenance);
    Json regs = Json::array();
    for (const auto r : result.grid.regressors) regs.push_back(std::string(to_string(r)));
    j["regressors"] = std::move(regs);
    Json cells = Json::array();
    for (const auto& c : result.grid.cells) {
        cells.push_back({{"combo", combo_id(c.mask)},
                         {"method", mask_name(c.mask)},
                         {"streams", mask_to_json(c.mask)},
                         {"regressor", std::string(to_string(c.regressor))},
                         {"mae", c.metrics.mae},
                         {"rmse", c.metrics.rmse},
                         {"n", c.metrics.n}});
    }
    j["cells"] = std::move(cells);
    Json imp = Json::array();
    for (const auto& c : result.improvement) {
        imp.push_back({{"combo", c.combo},
                       {"baseline", kBaselineCombo},
                       {"regressor", std::string(to_string(c.regressor))},
                       {"mae_percent", c.mae_percent},
                       {"rmse_percent", c.rmse_percent}});
    }
    j["improvement"] = std::move(imp);
    Json effects = Json::array();
    for (const auto& t : result.stream_effects) {
        Json rows = Json::array();
        for (const auto& r : t.rows) {
            rows.push_back({{"without", mask_name(r.without)},
                            {"with", mask_name(r.with)},
                            {"mae_percent", r.mae_percent},
                            {"rmse_percent", r.rmse_percent}});
        }
        effects.push_back({{"stream", std::string(to_string(t.stream))},
                           {"rows", std::move(rows)},
                           {"average_mae_percent", t.average_mae_percent},
                           {"average_rmse_percent", t.average_rmse_percent}});
    }
    j["stream_effects"] = std::move(effects);
    return j;
}

AblationResult ablation_from_json(const Json& j) {
    AblationResult r;
    try {
        for (const auto& s : j.at("regressors")) r.grid.regressors.push_back(regressor_kind_from_string(s.get<std::string>()));
        for (const auto& c : j.at("cells")) {
            r.grid.cells.push_back({mask_from_json(c.at("streams")),
                                    regressor_kind_from_string(c.at("regressor").get<std::string>()),
                                    {c.at("mae").get<double>(), c.at("rmse").get<double>(), c.at("n").get<std::size_t>()}});
        }
    } catch (const Json::exception& e) {
        throw FormatError(std::string("ablation report: ") + e.what());
    }
    r.improvement = improvement_table(r.grid);
    if (!j.value("stream_effects", Json::array()).empty()) {
        r.stream_effects.push_back(stream_effect_table(r.grid, Stream::text));
        r.stream_effects.push_back(stream_effect_table(r.grid, Stream::image));
    }
    return r;
}

std::string ablation_to_csv(const AblationResult& result, std::string_view header_comment) {
    std::ostringstream out;
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    std::vector<std::string> row{"metric", "method"};
    for (const auto r : result.grid.regressors) row.emplace_back(to_string(r));
    csv::write_row(out, row);
    const auto& masks = result.grid.cells;
    std::vector<StreamMask> order;
    for (const auto& c : masks) {
        if (std::find(order.begin(), order.end(), c.mask) == order.end()) order.push_back(c.mask);
    }
    for (const bool is_mae : {true, false}) {
        for (const auto& m : order) {
            const int id = combo_id(m);
            row.assign({is_mae ? "MAE" : "RMSE", (id ? "(" + std::to_string(id) + ") " : std::string()) + mask_name(m)});
            for (const auto r : result.grid.regressors) {
                const auto* c = result.grid.find(m, r);
                row.push_back(c ? csv::format_double(is_mae ? c->metrics.mae : c->metrics.rmse) : "");
            }
            csv::write_row(out, row);
        }
    }
    for (const bool is_mae : {true, false}) {
        for (const auto& combo : ablation_combos()) {
            if (combo.id == kBaselineCombo) continue;
            row.assign({is_mae ? "MAE improvement %" : "RMSE improvement %", combo.name});
            bool any = false;
            for (const auto r : result.grid.regressors) {
                const auto it = std::find_if(result.improvement.begin(), result.improvement.end(),
                                             [&](const ImprovementCell& c) { return c.combo == combo.id && c.regressor == r; });
                if (it == result.improvement.end()) {
                    row.emplace_back();
                } else {
                    any = true;
                    row.push_back(fixed2(is_mae ? it->mae_percent : it->rmse_percent));
                }
            }
            if (any) csv::write_row(out, row);
        }
    }
    for (const auto& t : result.stream_effects) {
        for (const bool is_mae : {true, false}) {
            std::string label = std::string(to_string(t.stream)) + (is_mae ? " effect MAE %" : " effect RMSE %");
            for (const auto& r : t.rows) {
                row.assign({label, mask_name(r.without) + " -> " + mask_name(r.with)});
                for (const double v : is_mae ? r.mae_percent : r.rmse_percent) row.push_back(fixed2(v));
                csv::write_row(out, row);
            }
            row.assign({label, "average"});
            for (const double v : is_mae ? t.average_mae_percent : t.average_rmse_percent) row.push_back(fixed2(v));
            csv::write_row(out, row);
        }
    }
    return out.str();
}

}  // namespace mhpp
