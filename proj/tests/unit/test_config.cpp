#include <algorithm>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mhpp/config.hpp"
#include "mhpp/error.hpp"

using namespace mhpp;

TEST_CASE("empty config yields the defaults") {
    const auto c = parse_config_text("");
    const auto d = default_config();
    CHECK(config_entries(c) == config_entries(d));
    CHECK(config_hash(c) == config_hash(d));
    CHECK(c.seed == 7);
    CHECK(c.text.output_dim == 128);
    CHECK(c.clip.embed_dim == 256);
    CHECK(parse_config_text("# only a comment\n\n   \n").seed == 7);
}

TEST_CASE("keys set their fields") {
    const auto c = parse_config_text(
        "gsne.L = 32\n"
        "text.pooling=max\n"
        "clip.tau = 0.1  # trailing comment\n"
        "fuse.streams = raw,text\n"
        "ablate.regressors = lasso, gbm\n"
        "gsne.append_sigma = true\n");
    CHECK(c.gsne.embedding_dim == 32);
    CHECK(c.text.pooling == Pooling::max);
    CHECK(c.clip.temperature == 0.1);
    CHECK(c.fuse_streams == StreamMask{Stream::raw, Stream::text});
    CHECK(c.ablate_regressors == std::vector<RegressorKind>{RegressorKind::lasso, RegressorKind::gradient_boosting});
    CHECK(c.gsne.append_sigma);
    CHECK(config_hash(c) != config_hash(default_config()));
}

TEST_CASE("the master seed propagates regardless of line order") {
    const auto a = parse_config_text("gsne.L = 8\nseed = 99\n");
    const auto b = parse_config_text("seed = 99\ngsne.L = 8\n");
    CHECK(config_entries(a) == config_entries(b));
    CHECK(a.gsne.seed == b.gsne.seed);
    CHECK(a.gsne.seed != default_config().gsne.seed);
    CHECK(a.clip.seed != a.gsne.seed);
}

TEST_CASE("malformed configs are rejected with a location") {
    const auto msg = [](std::string_view text) {
        try {
            parse_config_text(text, "run.cfg");
        } catch (const FormatError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(msg("gsne.LL = 3\n").find("run.cfg:1") != std::string::npos);
    CHECK(msg("gsne.LL = 3\n").find("unknown key 'gsne.LL'") != std::string::npos);
    CHECK(msg("seed = 1\nnot a pair\n").find("run.cfg:2") != std::string::npos);
    CHECK(msg("seed = 1\nseed = 2\n").find("duplicate") != std::string::npos);
    CHECK(msg("gsne.L = -3\n").find("gsne.L") != std::string::npos);
    CHECK(msg("split.ratio = 1.5\n") != "no error");
    CHECK(msg("text.pooling = sum\n") != "no error");
    CHECK(msg("fuse.streams = \n") != "no error");
}

TEST_CASE("config keys are sorted, complete and hash only model settings") {
    const auto keys = config_keys();
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    const auto entries = config_entries(default_config());
    CHECK(entries.size() == keys.size());
    auto c = default_config();
    c.input_listings = "/somewhere/else.csv";
    CHECK(config_hash(c) == config_hash(default_config()));
    // Entries emitted by config_entries parse back to the same config.
    std::string text;
    for (const auto& [k, v] : entries) text += k + " = " + v + "\n";
    CHECK(config_entries(parse_config_text(text)) == entries);
}

TEST_CASE("parse_config reads files") {
    const auto path = std::filesystem::temp_directory_path() / "mhpp-test.cfg";
    {
        std::ofstream out(path);
        out << "gen.n = 321\n";
    }
    CHECK(parse_config(path).listings == 321);
    std::filesystem::remove(path);
    CHECK_THROWS(parse_config(path));
}
