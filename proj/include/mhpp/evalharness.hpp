#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mhpp/fusion.hpp"
#include "mhpp/model_io.hpp"
#include "mhpp/regressors.hpp"

namespace mhpp {

double mae(std::span<const double> truth, std::span<const double> predictions);
double rmse(std::span<const double> truth, std::span<const double> predictions);

struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
};

MetricReport evaluate(std::span<const double> truth, std::span<const double> predictions);

/// 100 (base - method) / base; throws DomainError for a zero base.
double improvement_percent(double base, double method);

/// The seven stream combinations, numbered 1..7.
struct Combo {
    int id = 0;
    std::string name;
    StreamMask mask;
};

const std::vector<Combo>& ablation_combos();
inline constexpr int kBaselineCombo = 4;
/// Combo id for a mask, or 0 when the mask is not one of the seven.
int combo_id(const StreamMask& mask);
/// "Raw+first+second+text" style name for any mask.
std::string mask_name(const StreamMask& mask);

struct GridCell {
    StreamMask mask;
    RegressorKind regressor = RegressorKind::lasso;
    MetricReport metrics;
};

struct AblationGrid {
    std::vector<RegressorKind> regressors;  // column order
    std::vector<GridCell> cells;

    const GridCell* find(const StreamMask& mask, RegressorKind regressor) const;
    const GridCell& at(const StreamMask& mask, RegressorKind regressor) const;
    const GridCell& at(int combo, RegressorKind regressor) const;
};

struct ImprovementCell {
    int combo = 0;
    RegressorKind regressor = RegressorKind::lasso;
    double mae_percent = 0.0;
    double rmse_percent = 0.0;
};

/// Every combo other than the baseline against the baseline, per regressor.
std::vector<ImprovementCell> improvement_table(const AblationGrid& grid, int baseline_combo = kBaselineCombo);

/// Masks that gain `stream` in a stream-effect table, in display order.
std::vector<StreamMask> stream_effect_bases(Stream stream);

struct StreamEffectRow {
    StreamMask without;
    StreamMask with;
    std::vector<double> mae_percent;   // per regressor in grid order
    std::vector<double> rmse_percent;
};

struct StreamEffectTable {
    Stream stream = Stream::text;
    std::vector<StreamEffectRow> rows;
    std::vector<double> average_mae_percent;
    std::vector<double> average_rmse_percent;
};

/// Improvement from adding `stream` to each base mask, and its average.
StreamEffectTable stream_effect_table(const AblationGrid& grid, Stream stream);

struct AblationConfig {
    std::vector<RegressorSpec> regressors = {RegressorSpec::defaults(RegressorKind::lasso),
                                             RegressorSpec::defaults(RegressorKind::elastic_net),
                                             RegressorSpec::defaults(RegressorKind::kernel_ridge),
                                             RegressorSpec::defaults(RegressorKind::gradient_boosting)};
    bool stream_effects = false;  // also run the text and image effect sub-grids
};

struct AblationResult {
    AblationGrid grid;
    std::vector<ImprovementCell> improvement;
    std::vector<StreamEffectTable> stream_effects;
};

/// Masks evaluated by run_ablation: the seven combos, plus the extra masks of
/// the stream-effect tables when requested.
std::vector<StreamMask> ablation_masks(bool stream_effects);

/// Fuse, fit on train, score on test, for every mask and regressor.
AblationResult run_ablation(std::span<const ListingStreams> streams, std::span<const double> targets,
                            const SplitIndices& split, const AblationConfig& config);

Json ablation_to_json(const AblationResult& result, std::string_view provenance);
AblationResult ablation_from_json(const Json& j);
/// Grid laid out as metric x method rows and regressor columns, then the
/// improvement rows rounded to two decimals.
std::string ablation_to_csv(const AblationResult& result, std::string_view header_comment = {});

}  // namespace mhpp
