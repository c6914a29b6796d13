#include <cmath>
#include <map>

#include "doctest.h"
#include "mhpp/error.hpp"
#include "mhpp/evalharness.hpp"

using namespace mhpp;

namespace {

using S = Stream;

struct Reference {
    StreamMask mask;
    double lasso_mae, enet_mae, lasso_rmse, enet_rmse;
};

// Reference MAE and RMSE for every mask the effect tables need.
const std::vector<Reference>& reference_rows() {
    static const std::vector<Reference> rows = {
        {{S::raw}, 0.251, 0.25, 0.333, 0.331},
        {{S::raw, S::geo_first}, 0.22, 0.216, 0.295, 0.291},
        {{S::raw, S::geo_second}, 0.198, 0.196, 0.277, 0.271},
        {{S::raw, S::geo_first, S::geo_second}, 0.209, 0.205, 0.29, 0.289},
        {{S::raw, S::geo_first, S::geo_second, S::text}, 0.175, 0.166, 0.244, 0.23},
        {{S::raw, S::geo_first, S::geo_second, S::image}, 0.165, 0.161, 0.233, 0.224},
        {{S::raw, S::geo_first, S::geo_second, S::text, S::image}, 0.159, 0.151, 0.223, 0.211},
        {{S::raw, S::text}, 0.216, 0.207, 0.29, 0.278},
        {{S::raw, S::geo_first, S::text}, 0.195, 0.184, 0.263, 0.25},
        {{S::raw, S::geo_second, S::text}, 0.181, 0.172, 0.255, 0.24},
        {{S::raw, S::image}, 0.204, 0.201, 0.276, 0.27},
        {{S::raw, S::geo_first, S::image}, 0.189, 0.183, 0.257, 0.249},
        {{S::raw, S::geo_second, S::image}, 0.166, 0.162, 0.234, 0.225},
        {{S::raw, S::text, S::image}, 0.193, 0.186, 0.262, 0.252},
    };
    return rows;
}

AblationGrid reference_grid() {
    AblationGrid g;
    g.regressors = {RegressorKind::lasso, RegressorKind::elastic_net};
    for (const auto& p : reference_rows()) {
        g.cells.push_back({p.mask, RegressorKind::lasso, {p.lasso_mae, p.lasso_rmse, 1}});
        g.cells.push_back({p.mask, RegressorKind::elastic_net, {p.enet_mae, p.enet_rmse, 1}});
    }
    return g;
}

}  // namespace

TEST_CASE("metric examples") {
    const Vector t = {1, 2, 3}, p = {2, 2, 5};
    CHECK(mae(t, p) == doctest::Approx(1.0));
    CHECK(rmse(t, p) == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(rmse(t, p) == doctest::Approx(1.29099).epsilon(1e-5));
    CHECK(mae(t, t) == 0.0);
    CHECK_THROWS_AS(mae(t, Vector{1}), ShapeError);
    CHECK_THROWS(mae(Vector{}, Vector{}));
    const auto r = evaluate(t, p);
    CHECK(r.n == 3);
}

TEST_CASE("rmse dominates mae") {
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng.uniform_index(40);
        Vector a(n), b(n);
        for (std::size_t k = 0; k < n; ++k) {
            a[k] = rng.normal(0, 3);
            b[k] = rng.normal(0, 3);
        }
        CHECK(rmse(a, b) >= mae(a, b) - 1e-15);
    }
}

TEST_CASE("improvement percentage examples") {
    CHECK(improvement_percent(0.209, 0.175) == doctest::Approx(16.27).epsilon(1e-3));
    CHECK(improvement_percent(0.209, 0.165) == doctest::Approx(21.05).epsilon(1e-3));
    CHECK(improvement_percent(0.2, 0.3) < 0.0);
    CHECK_THROWS_AS(improvement_percent(0.0, 0.1), DomainError);
}

TEST_CASE("combo definitions and names") {
    const auto& combos = ablation_combos();
    REQUIRE(combos.size() == 7);
    CHECK(combos[0].mask == StreamMask{S::raw});
    CHECK(combos[3].mask == StreamMask{S::raw, S::geo_first, S::geo_second});
    CHECK(combos[6].mask == StreamMask{S::raw, S::geo_first, S::geo_second, S::text, S::image});
    for (const auto& c : combos) CHECK(combo_id(c.mask) == c.id);
    CHECK(combo_id(StreamMask{S::raw, S::text}) == 0);
    CHECK(mask_name(combos[4].mask) == "Raw+first+second+text");
    CHECK(ablation_masks(false).size() == 7);
    CHECK(ablation_masks(true).size() == 14);
}

TEST_CASE("improvement table reproduces reference improvement rows") {
    const auto table = improvement_table(reference_grid());
    std::map<std::pair<int, RegressorKind>, ImprovementCell> by;
    for (const auto& c : table) by[{c.combo, c.regressor}] = c;
    CHECK(by.size() == 12);  // 6 non-baseline combos x 2 regressors
    const auto check = [&](int combo, RegressorKind r, double mae_pct, double rmse_pct) {
        CHECK(std::abs(by.at({combo, r}).mae_percent - mae_pct) <= 0.01);
        CHECK(std::abs(by.at({combo, r}).rmse_percent - rmse_pct) <= 0.01);
    };
    check(5, RegressorKind::lasso, 16.27, 15.86);
    check(6, RegressorKind::lasso, 21.05, 19.66);
    check(7, RegressorKind::lasso, 23.92, 23.1);
    check(5, RegressorKind::elastic_net, 19.02, 20.42);
    check(6, RegressorKind::elastic_net, 21.46, 22.49);
    check(7, RegressorKind::elastic_net, 26.34, 26.99);
}

TEST_CASE("stream effect averages reproduce reference average rows") {
    const auto grid = reference_grid();
    const auto text = stream_effect_table(grid, S::text);
    CHECK(text.rows.size() == 5);
    CHECK(std::abs(text.average_mae_percent[0] - 10.76) <= 0.01);
    CHECK(std::abs(text.average_mae_percent[1] - 13.9) <= 0.01);
    CHECK(std::abs(text.average_rmse_percent[0] - 10.37) <= 0.01);
    const auto image = stream_effect_table(grid, S::image);
    CHECK(image.rows.size() == 6);
    CHECK(std::abs(image.average_mae_percent[0] - 14.97) <= 0.01);
    CHECK(std::abs(image.average_mae_percent[1] - 15.48) <= 0.01);
    CHECK(std::abs(image.average_rmse_percent[0] - 13.91) <= 0.01);
    for (const auto& row : image.rows) {
        CHECK_FALSE(row.without.has(S::image));
        CHECK(row.with.has(S::image));
    }
}

TEST_CASE("ablation over synthetic streams fills the grid and serializes") {
    Rng rng(12);
    const std::size_t n = 90;
    std::vector<ListingStreams> streams(n);
    Vector y(n);
    SplitIndices split;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lengths[kStreamCount] = {4, 2, 2, 3, 3};
        for (std::size_t k = 0; k < kStreamCount; ++k) {
            Vector v(lengths[k]);
            for (auto& x : v) x = rng.normal();
            streams[i][k] = std::move(v);
        }
        y[i] = (*streams[i][0])[0] + 0.8 * (*streams[i][3])[1] + 0.1 * rng.normal();
        (i % 4 == 0 ? split.test : split.train).push_back(i);
    }
    AblationConfig cfg;
    cfg.regressors[3].trees = 20;
    cfg.stream_effects = true;
    const auto result = run_ablation(streams, y, split, cfg);
    CHECK(result.grid.cells.size() == 14 * 4);
    CHECK(result.improvement.size() == 6 * 4);
    CHECK(result.stream_effects.size() == 2);
    // The planted text signal shows up for the linear model.
    CHECK(result.grid.at(5, RegressorKind::lasso).metrics.mae < result.grid.at(4, RegressorKind::lasso).metrics.mae);

    const auto j = ablation_to_json(result, "prov");
    CHECK(j.at("provenance") == "prov");
    const auto back = ablation_from_json(Json::parse(j.dump()));
    CHECK(ablation_to_json(back, "prov").dump() == j.dump());
    const auto csv = ablation_to_csv(result, "prov");
    CHECK(csv.rfind("# prov\n", 0) == 0);

    AblationConfig basic;
    basic.regressors[3].trees = 5;
    CHECK(run_ablation(streams, y, split, basic).grid.cells.size() == 28);
}
