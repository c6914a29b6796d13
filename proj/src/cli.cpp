#include "mhpp/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>

#include "CLI11.hpp"
#include "mhpp/error.hpp"
#include "mhpp/pipeline.hpp"

namespace mhpp {
namespace {

namespace fs = std::filesystem;

struct Paths {
    fs::path listings, pois, gsne, text, text_table, clip, fused, ablation_json, ablation_csv;
    fs::path regressor(RegressorKind k) const { return root / "models" / ("regressor_" + std::string(to_string(k)) + ".json"); }
    fs::path fit_report(RegressorKind k) const { return root / "reports" / ("fit_" + std::string(to_string(k)) + ".json"); }
    fs::path root;
};

Paths paths_for(const fs::path& out) {
    Paths p;
    p.root = out;
    p.listings = out / "data" / "listings.csv";
    p.pois = out / "data" / "pois.csv";
    p.gsne = out / "models" / "gsne.json";
    p.text = out / "models" / "text.json";
    p.text_table = out / "models" / "text_tokens.txt";
    p.clip = out / "models" / "clip.json";
    p.fused = out / "features" / "fused.csv";
    p.ablation_json = out / "reports" / "ablation.json";
    p.ablation_csv = out / "reports" / "ablation.csv";
    return p;
}

std::string relative(const Paths& p, const fs::path& f) { return fs::relative(f, p.root).generic_string(); }

void require(const Paths& p, const fs::path& f, std::string_view producer) {
    if (!fs::exists(f)) throw DependencyError(relative(p, f), std::string(producer));
}

struct Data {
    std::vector<Listing> listings;
    std::vector<Poi> pois;
};

Data load_data(const RunConfig& config, const Paths& p, std::ostream& log) {
    fs::path listings = p.listings, pois = p.pois;
    if (!config.input_listings.empty() || !config.input_pois.empty()) {
        if (config.input_listings.empty() || config.input_pois.empty()) {
            throw DomainError("input.listings and input.pois must be set together");
        }
        listings = config.input_listings;
        pois = config.input_pois;
        if (!fs::exists(listings)) throw Error("input listings '" + listings.string() + "' not found");
        if (!fs::exists(pois)) throw Error("input POIs '" + pois.string() + "' not found");
    } else {
        require(p, listings, "gen");
        require(p, pois, "gen");
    }
    auto loaded = load_listings(listings);
    for (const auto& r : loaded.rejected) log << "rejected " << listings.string() << ":" << r.line << ": " << r.message << '\n';
    Data d{std::move(loaded.listings), load_pois(pois)};
    if (d.listings.empty()) throw DomainError("no usable listings in '" + listings.string() + "'");
    return d;
}

Json with_provenance(Json j, const RunConfig& config) {
    j["provenance"] = provenance_line(config);
    return j;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

void cmd_gen(const RunConfig& config, const Paths& p, std::ostream& log) {
    const auto corpus = synth_generate(config.listings, config.pois, config.seed, config.generator);
    const auto header = provenance_line(config);
    save_listings(p.listings, corpus.listings, "images", header);
    save_pois(p.pois, corpus.pois, header);
    log << "gen: " << corpus.listings.size() << " listings, " << corpus.pois.size() << " POIs -> "
        << p.listings.parent_path().string() << '\n';
}

void cmd_train_gsne(const RunConfig& config, const Paths& p, std::ostream& log) {
    const auto d = load_data(config, p, log);
    const auto split = make_split(config, d.listings);
    GsneTrainingLog tlog;
    const auto params = fit_gsne_stage(config, d.listings, d.pois, split, &tlog);
    write_json(p.gsne, with_provenance(gsne_to_json(params), config));
    log << "train-gsne: final epoch loss " << tlog.epoch_loss.back() << " -> " << p.gsne.string() << '\n';
}

void cmd_train_text(const RunConfig& config, const Paths& p, std::ostream& log) {
    const auto d = load_data(config, p, log);
    const auto split = make_split(config, d.listings);
    SkipGramLog tlog;
    const auto model = fit_text_stage(config, d.listings, split, &tlog);
    write_json(p.text, with_provenance(text_model_to_json(model), config));
    save_embedding_table(p.text_table, model.vocab, model.table);
    log << "train-text: vocabulary " << model.vocab.size() << ", final epoch loss " << tlog.epoch_loss.back()
        << " -> " << p.text.string() << '\n';
}

void cmd_train_clip(const RunConfig& config, const Paths& p, std::ostream& log) {
    const auto d = load_data(config, p, log);
    const auto split = make_split(config, d.listings);
    ClipTrainingLog tlog;
    const auto model = fit_clip_stage(config, d.listings, split, &tlog);
    write_json(p.clip, with_provenance(clip_to_json(model), config));
    log << "train-clip: final epoch loss " << tlog.epoch_loss.back() << " -> " << p.clip.string() << '\n';
}

TrainedModels load_models(const Paths& p) {
    require(p, p.gsne, "train-gsne");
    require(p, p.text, "train-text");
    require(p, p.clip, "train-clip");
    return {gsne_from_json(read_json(p.gsne)), text_model_from_json(read_json(p.text)),
            clip_from_json(read_json(p.clip))};
}

void cmd_fuse(const RunConfig& config, const Paths& p, std::ostream& log) {
    const auto d = load_data(config, p, log);
    const auto models = load_models(p);
    const auto split = make_split(config, d.listings);
    const auto streams = compute_streams(models, d.listings);
    std::vector<StreamSlice> layout;
    FusedTable table;
    table.values = fuse_rows(streams, config.fuse_streams, &layout);
    table.columns = fused_column_names(layout);
    table.targets = log_prices(d.listings);
    table.splits.assign(d.listings.size(), "train");
    for (const auto i : split.test) table.splits[i] = "test";
    for (const auto& l : d.listings) table.ids.push_back(l.id);
    save_fused_csv(p.fused, table, provenance_line(config));
    log << "fuse: " << table.values.rows() << " x " << table.values.cols() << " (" << config.fuse_streams.label()
        << ") -> " << p.fused.string() << '\n';
}

void cmd_fit(const RunConfig& config, const Paths& p, std::ostream& log) {
    require(p, p.fused, "fuse");
    const auto table = load_fused_csv(p.fused);
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < table.splits.size(); ++i) (table.splits[i] == "train" ? train : test).push_back(i);
    if (train.empty() || test.empty()) throw DomainError("fit: fused table needs both train and test rows");
    auto rows = [&](const std::vector<std::size_t>& idx) {
        DenseMatrix m(idx.size(), table.values.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const auto src = table.values.row(idx[r]);
            std::copy(src.begin(), src.end(), m.row(r).begin());
        }
        return m;
    };
    auto targets = [&](const std::vector<std::size_t>& idx) {
        Vector y;
        for (const auto i : idx) y.push_back(table.targets[i]);
        return y;
    };
    const auto scaled = standardize_fit_apply(rows(train), rows(test));
    const auto x_train = scaled.standardizer.apply(rows(train));
    const auto y_train = targets(train), y_test = targets(test);
    const auto& spec = config.regressor(config.fit_regressor);
    const auto model = fit(spec, x_train, y_train);
    const auto metrics = evaluate(y_test, predict(model, scaled.transformed));

    auto mj = with_provenance(regressor_to_json(model), config);
    mj["standardizer"] = standardizer_to_json(scaled.standardizer);
    mj["columns"] = table.columns;
    write_json(p.regressor(config.fit_regressor), mj);
    Json report{{"provenance", provenance_line(config)},
                {"regressor", std::string(to_string(config.fit_regressor))},
                {"train_rows", train.size()},
                {"test_rows", test.size()},
                {"mae", metrics.mae},
                {"rmse", metrics.rmse},
                {"converged", model.diagnostics.converged}};
    write_json(p.fit_report(config.fit_regressor), report);
    if (!model.diagnostics.converged) {
        log << "fit: warning: coordinate descent stopped at max_iter with change " << model.diagnostics.final_change
            << '\n';
    }
    log << "fit: " << to_string(config.fit_regressor) << " test MAE " << metrics.mae << ", RMSE " << metrics.rmse
        << '\n';
}

void cmd_ablate(const RunConfig& config, const Paths& p, std::ostream& log) {
    if (config.input_listings.empty() && (!fs::exists(p.listings) || !fs::exists(p.pois))) cmd_gen(config, p, log);
    const auto d = load_data(config, p, log);
    TrainedModels models;
    const auto result = run_pipeline_ablation(config, d.listings, d.pois, &models);
    write_json(p.gsne, with_provenance(gsne_to_json(models.gsne), config));
    write_json(p.text, with_provenance(text_model_to_json(models.text), config));
    save_embedding_table(p.text_table, models.text.vocab, models.text.table);
    write_json(p.clip, with_provenance(clip_to_json(models.clip), config));
    write_json(p.ablation_json, ablation_to_json(result, provenance_line(config)));
    write_text(p.ablation_csv, ablation_to_csv(result, provenance_line(config)));
    log << "ablate: " << result.grid.cells.size() << " cells -> " << p.ablation_json.string() << '\n';
}

void cmd_report(const RunConfig& config, const Paths& p, std::ostream& log) {
    require(p, p.ablation_json, "ablate");
    const auto result = ablation_from_json(read_json(p.ablation_json));
    const auto csv = ablation_to_csv(result, provenance_line(config));
    write_text(p.ablation_csv, csv);
    log << csv;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names = {"gen", "train-gsne", "train-text", "train-clip",
                                                   "fuse", "fit", "ablate", "report"};
    return names;
}

std::string provenance_line(const RunConfig& config) {
    return "mhpp " + std::string(kToolVersion) + " config=" + config_hash(config);
}

void run_subcommand(std::string_view name, const RunConfig& config, const fs::path& out, std::ostream& log) {
    const auto p = paths_for(out);
    if (name == "gen") return cmd_gen(config, p, log);
    if (name == "train-gsne") return cmd_train_gsne(config, p, log);
    if (name == "train-text") return cmd_train_text(config, p, log);
    if (name == "train-clip") return cmd_train_clip(config, p, log);
    if (name == "fuse") return cmd_fuse(config, p, log);
    if (name == "fit") return cmd_fit(config, p, log);
    if (name == "ablate") return cmd_ablate(config, p, log);
    if (name == "report") return cmd_report(config, p, log);
    throw DomainError("unknown subcommand '" + std::string(name) + "'");
}

int run_cli(int argc, char** argv, std::ostream& log, std::ostream& err) {
    CLI::App app{"Multi-modal house price prediction toolkit"};
    app.set_version_flag("--version", std::string(kToolVersion));
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--seed", seed, "master seed (overrides the config)");
    app.add_option("--out", out_dir, "artifact directory (default: $MHPP_OUT, else ./mhpp-run)");
    app.require_subcommand(1);
    app.fallthrough();
    for (const auto& n : subcommand_names()) app.add_subcommand(n);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, log, err);
    }
    const std::string name = app.get_subcommands().front()->get_name();
    try {
        RunConfig config = config_path.empty() ? default_config() : parse_config(config_path);
        if (seed) config.apply_seed(*seed);
        if (out_dir.empty()) {
            const char* env = std::getenv("MHPP_OUT");
            out_dir = env && *env ? env : "mhpp-run";
        }
        run_subcommand(name, config, out_dir, log);
    } catch (const std::exception& e) {
        err << "mhpp " << name << ": error: " << e.what() << '\n';
        return dynamic_cast<const DependencyError*>(&e) ? 3 : 1;
    }
    return 0;
}

}  // namespace mhpp
