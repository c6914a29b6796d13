#include "mhpp/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "mhpp/csv.hpp"
#include "mhpp/error.hpp"

namespace mhpp {
namespace {

struct Entry {
    std::string key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
    bool is_path = false;
};

[[noreturn]] void bad_value(std::string_view value, std::string_view expected) {
    throw DomainError("expected " + std::string(expected) + ", got '" + std::string(value) + "'");
}

std::size_t parse_size(std::string_view v) {
    std::size_t out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty()) bad_value(v, "a non-negative integer");
    return out;
}

std::uint64_t parse_u64(std::string_view v) {
    std::uint64_t out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || v.empty()) bad_value(v, "an unsigned 64-bit integer");
    return out;
}

double parse_real(std::string_view v) {
    const auto d = csv::parse_double(v);
    if (!d || !std::isfinite(*d)) bad_value(v, "a finite number");
    return *d;
}

bool parse_bool(std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    bad_value(v, "true or false");
}

double positive(double v, std::string_view what) {
    if (!(v > 0.0)) throw DomainError(std::string(what) + " must be positive");
    return v;
}

std::size_t at_least(std::size_t v, std::size_t lo, std::string_view what) {
    if (v < lo) throw DomainError(std::string(what) + " must be at least " + std::to_string(lo));
    return v;
}

Entry sz(std::string key, std::function<std::size_t&(RunConfig&)> ref, std::size_t lo = 0) {
    return {key,
            [ref, lo, key](RunConfig& c, std::string_view v) { ref(c) = at_least(parse_size(v), lo, key); },
            [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); }};
}

Entry real(std::string key, std::function<double&(RunConfig&)> ref, bool must_be_positive = false) {
    return {key,
            [ref, must_be_positive, key](RunConfig& c, std::string_view v) {
                const double d = parse_real(v);
                ref(c) = must_be_positive ? positive(d, key) : d;
            },
            [ref](const RunConfig& c) { return csv::format_double(ref(const_cast<RunConfig&>(c))); }};
}

Entry boolean(std::string key, std::function<bool&(RunConfig&)> ref) {
    return {key, [ref](RunConfig& c, std::string_view v) { ref(c) = parse_bool(v); },
            [ref](const RunConfig& c) { return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

Entry path(std::string key, std::function<std::string&(RunConfig&)> ref) {
    return {key, [ref](RunConfig& c, std::string_view v) { ref(c) = std::string(v); },
            [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); }, true};
}

std::string join_streams(const StreamMask& m) {
    std::string out;
    for (std::size_t i = 0; i < kStreamCount; ++i) {
        if (!m.has(static_cast<Stream>(i))) continue;
        if (!out.empty()) out += ',';
        out += to_string(static_cast<Stream>(i));
    }
    return out;
}

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = [] {
        std::vector<Entry> e;
        e.push_back({"seed", [](RunConfig& c, std::string_view v) { c.apply_seed(parse_u64(v)); },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});

        e.push_back(sz("gen.n", [](RunConfig& c) -> std::size_t& { return c.listings; }, 1));
        e.push_back(sz("gen.m", [](RunConfig& c) -> std::size_t& { return c.pois; }, 3));
        e.push_back(real("gen.half_extent_m", [](RunConfig& c) -> double& { return c.generator.half_extent_m; }, true));
        e.push_back(real("gen.base_log_price", [](RunConfig& c) -> double& { return c.generator.base_log_price; }));
        e.push_back(real("gen.raw_weight", [](RunConfig& c) -> double& { return c.generator.raw_weight; }));
        e.push_back(real("gen.geo_weight", [](RunConfig& c) -> double& { return c.generator.geo_weight; }));
        e.push_back(real("gen.text_weight", [](RunConfig& c) -> double& { return c.generator.text_weight; }));
        e.push_back(real("gen.image_weight", [](RunConfig& c) -> double& { return c.generator.image_weight; }));
        e.push_back(real("gen.noise", [](RunConfig& c) -> double& { return c.generator.noise_stddev; }));

        e.push_back(path("input.listings", [](RunConfig& c) -> std::string& { return c.input_listings; }));
        e.push_back(path("input.pois", [](RunConfig& c) -> std::string& { return c.input_pois; }));

        e.push_back({"split.ratio",
                     [](RunConfig& c, std::string_view v) {
                         const double r = parse_real(v);
                         if (!(r > 0.0 && r < 1.0)) throw DomainError("split.ratio must lie in (0, 1)");
                         c.split_ratio = r;
                     },
                     [](const RunConfig& c) { return csv::format_double(c.split_ratio); }});
        e.push_back(sz("split.bins", [](RunConfig& c) -> std::size_t& { return c.split_bins; }, 1));

        e.push_back(real("graph.delta_max", [](RunConfig& c) -> double& { return c.graph.delta_max; }, true));
        e.push_back(real("graph.delta_min", [](RunConfig& c) -> double& { return c.graph.delta_min; }, true));
        e.push_back(boolean("graph.cross_partition_only", [](RunConfig& c) -> bool& { return c.graph.cross_partition_only; }));

        e.push_back(sz("gsne.L", [](RunConfig& c) -> std::size_t& { return c.gsne.embedding_dim; }, 1));
        e.push_back(sz("gsne.hidden", [](RunConfig& c) -> std::size_t& { return c.gsne.hidden_dim; }, 1));
        e.push_back(sz("gsne.negatives", [](RunConfig& c) -> std::size_t& { return c.gsne.negatives; }));
        e.push_back(real("gsne.learning_rate", [](RunConfig& c) -> double& { return c.gsne.learning_rate; }, true));
        e.push_back(sz("gsne.epochs", [](RunConfig& c) -> std::size_t& { return c.gsne.epochs; }, 1));
        e.push_back(sz("gsne.batch", [](RunConfig& c) -> std::size_t& { return c.gsne.batch_size; }, 1));
        e.push_back(sz("gsne.max_batches", [](RunConfig& c) -> std::size_t& { return c.gsne.max_batches_per_epoch; }));
        e.push_back(boolean("gsne.append_sigma", [](RunConfig& c) -> bool& { return c.gsne.append_sigma; }));

        e.push_back(sz("text.d", [](RunConfig& c) -> std::size_t& { return c.text.skipgram.dim; }, 1));
        e.push_back(sz("text.window", [](RunConfig& c) -> std::size_t& { return c.text.skipgram.window; }, 1));
        e.push_back(sz("text.negatives", [](RunConfig& c) -> std::size_t& { return c.text.skipgram.negatives; }));
        e.push_back(sz("text.epochs", [](RunConfig& c) -> std::size_t& { return c.text.skipgram.epochs; }, 1));
        e.push_back(real("text.learning_rate", [](RunConfig& c) -> double& { return c.text.skipgram.learning_rate; }, true));
        e.push_back(sz("text.min_count", [](RunConfig& c) -> std::size_t& { return c.text.min_count; }, 1));
        e.push_back({"text.pooling", [](RunConfig& c, std::string_view v) { c.text.pooling = pooling_from_string(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.text.pooling)); }});
        e.push_back(sz("text.dim", [](RunConfig& c) -> std::size_t& { return c.text.output_dim; }, 1));

        e.push_back(sz("clip.batch", [](RunConfig& c) -> std::size_t& { return c.clip.batch_size; }, 2));
        e.push_back(sz("clip.e", [](RunConfig& c) -> std::size_t& { return c.clip.embed_dim; }, 1));
        e.push_back(real("clip.tau", [](RunConfig& c) -> double& { return c.clip.temperature; }, true));
        e.push_back(real("clip.learning_rate", [](RunConfig& c) -> double& { return c.clip.learning_rate; }, true));
        e.push_back(sz("clip.epochs", [](RunConfig& c) -> std::size_t& { return c.clip.epochs; }, 1));
        e.push_back(sz("clip.grid", [](RunConfig& c) -> std::size_t& { return c.clip.grid; }, 1));
        e.push_back(sz("clip.tile", [](RunConfig& c) -> std::size_t& { return c.clip.tile; }, 1));
        e.push_back(sz("clip.image_hidden", [](RunConfig& c) -> std::size_t& { return c.clip.image_hidden; }, 1));
        e.push_back(sz("clip.image_dim", [](RunConfig& c) -> std::size_t& { return c.clip.image_dim; }, 1));
        e.push_back(sz("clip.token_dim", [](RunConfig& c) -> std::size_t& { return c.clip.token_dim; }, 1));
        e.push_back(sz("clip.text_dim", [](RunConfig& c) -> std::size_t& { return c.clip.text_dim; }, 1));
        e.push_back(sz("clip.min_count", [](RunConfig& c) -> std::size_t& { return c.clip.min_count; }, 1));

        e.push_back(real("lasso.lambda", [](RunConfig& c) -> double& { return c.lasso.lambda; }));
        e.push_back(real("enet.lambda", [](RunConfig& c) -> double& { return c.enet.lambda; }));
        e.push_back({"enet.l1_ratio",
                     [](RunConfig& c, std::string_view v) {
                         const double r = parse_real(v);
                         if (!(r >= 0.0 && r <= 1.0)) throw DomainError("enet.l1_ratio must lie in [0, 1]");
                         c.enet.l1_ratio = r;
                     },
                     [](const RunConfig& c) { return csv::format_double(c.enet.l1_ratio); }});
        e.push_back(real("krr.lambda", [](RunConfig& c) -> double& { return c.krr.lambda; }));
        e.push_back(real("krr.gamma", [](RunConfig& c) -> double& { return c.krr.gamma; }));
        e.push_back(sz("gbm.trees", [](RunConfig& c) -> std::size_t& { return c.gbm.trees; }, 1));
        e.push_back(sz("gbm.depth", [](RunConfig& c) -> std::size_t& { return c.gbm.depth; }));
        e.push_back(real("gbm.shrinkage", [](RunConfig& c) -> double& { return c.gbm.shrinkage; }, true));
        e.push_back({"linear.tol",
                     [](RunConfig& c, std::string_view v) {
                         const double t = positive(parse_real(v), "linear.tol");
                         c.lasso.tol = c.enet.tol = t;
                     },
                     [](const RunConfig& c) { return csv::format_double(c.lasso.tol); }});
        e.push_back({"linear.max_iter",
                     [](RunConfig& c, std::string_view v) {
                         const auto n = at_least(parse_size(v), 1, "linear.max_iter");
                         c.lasso.max_iter = c.enet.max_iter = n;
                     },
                     [](const RunConfig& c) { return std::to_string(c.lasso.max_iter); }});

        e.push_back({"fuse.streams",
                     [](RunConfig& c, std::string_view v) {
                         StreamMask m;
                         for (const auto& s : csv::split(v, ',')) m.set(stream_from_string(csv::trim(s)));
                         if (!m.any()) throw DomainError("fuse.streams must name at least one stream");
                         c.fuse_streams = m;
                     },
                     [](const RunConfig& c) { return join_streams(c.fuse_streams); }});
        e.push_back({"fit.regressor", [](RunConfig& c, std::string_view v) { c.fit_regressor = regressor_kind_from_string(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.fit_regressor)); }});
        e.push_back({"ablate.regressors",
                     [](RunConfig& c, std::string_view v) {
                         std::vector<RegressorKind> kinds;
                         for (const auto& s : csv::split(v, ',')) {
                             const auto k = regressor_kind_from_string(csv::trim(s));
                             if (std::find(kinds.begin(), kinds.end(), k) != kinds.end()) {
                                 throw DomainError("ablate.regressors lists '" + std::string(to_string(k)) + "' twice");
                             }
                             kinds.push_back(k);
                         }
                         if (kinds.empty()) throw DomainError("ablate.regressors must not be empty");
                         c.ablate_regressors = std::move(kinds);
                     },
                     [](const RunConfig& c) {
                         std::string out;
                         for (const auto k : c.ablate_regressors) {
                             if (!out.empty()) out += ',';
                             out += to_string(k);
                         }
                         return out;
                     }});
        e.push_back(boolean("ablate.stream_effects", [](RunConfig& c) -> bool& { return c.ablate_stream_effects; }));

        std::sort(e.begin(), e.end(), [](const Entry& a, const Entry& b) { return a.key < b.key; });
        return e;
    }();
    return table;
}

const Entry* find_entry(std::string_view key) {
    for (const auto& e : entries()) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

}  // namespace

void RunConfig::apply_seed(std::uint64_t master) {
    seed = master;
    gsne.seed = derive_seed(master, "gsne");
    text.skipgram.seed = derive_seed(master, "text");
    clip.seed = derive_seed(master, "clip");
    for (auto* r : {&lasso, &enet, &krr, &gbm}) r->seed = derive_seed(master, "regressor");
}

const RegressorSpec& RunConfig::regressor(RegressorKind kind) const {
    switch (kind) {
        case RegressorKind::lasso: return lasso;
        case RegressorKind::elastic_net: return enet;
        case RegressorKind::kernel_ridge: return krr;
        case RegressorKind::gradient_boosting: return gbm;
    }
    throw DomainError("unknown regressor kind");
}

AblationConfig RunConfig::ablation() const {
    AblationConfig a;
    a.regressors.clear();
    for (const auto k : ablate_regressors) a.regressors.push_back(regressor(k));
    a.stream_effects = ablate_stream_effects;
    return a;
}

RunConfig default_config() {
    RunConfig c;
    c.apply_seed(c.seed);
    return c;
}

RunConfig parse_config_text(std::string_view text, std::string_view source) {
    RunConfig c = default_config();
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::vector<std::pair<std::string, std::string>> pending;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = csv::trim(line);
        if (line.empty()) continue;
        const auto where = std::string(source) + ":" + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw FormatError(where + "expected 'key = value'");
        const auto key = std::string(csv::trim(line.substr(0, eq)));
        const auto value = std::string(csv::trim(line.substr(eq + 1)));
        if (key.empty()) throw FormatError(where + "missing key");
        if (!find_entry(key)) throw FormatError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw FormatError(where + "duplicate key '" + key + "'");
        pending.emplace_back(key, value);
    }
    // The master seed first, so that it cannot clobber anything set explicitly.
    std::stable_partition(pending.begin(), pending.end(), [](const auto& kv) { return kv.first == "seed"; });
    for (const auto& [key, value] : pending) {
        try {
            find_entry(key)->set(c, value);
        } catch (const DomainError& e) {
            throw FormatError(std::string(source) + ": key '" + key + "': " + e.what());
        }
    }
    return c;
}

RunConfig parse_config(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open config '" + p.string() + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return parse_config_text(s.str(), p.string());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : entries()) out.emplace_back(e.key, e.get(config));
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
}

std::string config_hash(const RunConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& e : entries()) {
        if (e.is_path) continue;
        const auto line = e.key + "=" + e.get(config) + "\n";
        for (const unsigned char ch : line) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace mhpp
