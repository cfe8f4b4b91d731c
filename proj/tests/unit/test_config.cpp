#include "dysfluency/config.hpp"
#include "dysfluency/errors.hpp"

#include "properties.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace dysfluency;
using namespace testing;

TEST_CASE("defaults are valid and match the documented values") {
    const RuleConfig cfg;
    CHECK(cfg.violations().empty());
    CHECK(cfg.alpha == 1.2);
    CHECK(cfg.theta_sim == 0.92);
    CHECK(cfg.theta_f0 == 15.0);
    CHECK(cfg.theta_hnr == 10.0);
    CHECK(cfg.dtw_window_frames == 30);
    CHECK(cfg.theta_dtw == 0.3);
    CHECK(cfg.theta_word_dtw == 0.5);
    CHECK(cfg.word_window_s == 1.5);
    CHECK(cfg.theta_r == 0.5);
    CHECK(cfg.acf_lag_min_s == 0.05);
    CHECK(cfg.acf_lag_max_s == 0.4);
    CHECK(cfg.block_silence_s == 0.35);
    CHECK(cfg.block_preflux_s == 0.10);
    CHECK(cfg.audible_block_rms_db == -30.0);
    CHECK(cfg.audible_block_centroid_hz == 2000.0);
    CHECK(cfg.audible_block_min_s == 0.20);
    CHECK(cfg.min_separation_s == 0.10);
    CHECK(cfg.overlap_gate == 0.30);
    CHECK(cfg.rate_normalization_enabled);
    CHECK(cfg.fixed_t_min_s == 0.25);
    CHECK(cfg.acf_weight_energy + cfg.acf_weight_flux + cfg.acf_weight_centroid == doctest::Approx(1.0));
}

TEST_CASE("json maps 1:1 onto the fields") {
    const auto j = config_to_json(RuleConfig{});
    std::set<std::string> keys;
    for (const auto& f : config_fields()) keys.insert(std::string(f.name));
    CHECK(keys.size() == config_fields().size());
    CHECK(j.size() == keys.size());
    for (const auto& [k, v] : j.items()) CHECK(keys.count(k) == 1);
    CHECK(config_from_json(j) == RuleConfig{});
    CHECK(config_field_value(RuleConfig{}, "theta_sim") == 0.92);
    CHECK_THROWS_AS(config_field_value(RuleConfig{}, "nope"), ConfigError);
}

TEST_CASE("every field survives a json round trip") {
    RuleConfig cfg;
    cfg.alpha = 1.05;
    cfg.theta_sim = 0.931;
    cfg.rep_min_cycles = 3;
    cfg.rate_normalization_enabled = false;
    cfg.calibrated_speaking_rate = 3.7;
    const RuleConfig back = config_from_json(nlohmann::json::parse(config_to_json(cfg).dump()));
    CHECK(back == cfg);
}

TEST_CASE("invalid values are rejected") {
    const std::vector<nlohmann::json> bad = {
        {{"theta_sim", 1.5}},          {{"theta_sim", 0.0}},          {{"alpha", -1.0}},
        {{"theta_dtw", 0.0}},          {{"dtw_window_frames", 2}},    {{"acf_weight_energy", 0.9}},
        {{"acf_lag_min_s", 0.5}},      {{"overlap_gate", 0.0}},       {{"block_silence_s", 3.0}},
        {{"audible_block_rms_db", 3}}, {{"f0_min_hz", 500.0}},        {{"rate_min", 9.0}},
        {{"theta_sim", "high"}},       {{"rep_min_cycles", 2.5}},     {{"rate_normalization_enabled", 1}},
        {{"unknown_field", 1}},        nlohmann::json::array({1, 2}),
    };
    for (const auto& j : bad) {
        INFO(j.dump());
        CHECK_THROWS_AS(config_from_json(j), ConfigError);
    }
    CHECK(config_from_json({{"rep_min_cycles", 3.0}}).rep_min_cycles == 3);
}

TEST_CASE("apply_patch is atomic and reports changes") {
    RuleConfig cfg;
    const auto changes = apply_patch(cfg, {{"theta_sim", 0.95}, {"alpha", 1.2}, {"theta_dtw", 0.25}});
    REQUIRE(changes.size() == 2);
    CHECK(changes[0].field == "theta_sim");
    CHECK(changes[0].old_value == 0.92);
    CHECK(changes[0].new_value == 0.95);
    CHECK(changes[1].field == "theta_dtw");
    CHECK(cfg.theta_sim == 0.95);

    const RuleConfig before = cfg;
    CHECK_THROWS_AS(apply_patch(cfg, {{"alpha", 1.0}, {"theta_sim", 1.5}}), ConfigError);
    CHECK(cfg == before);
    CHECK(apply_patch(cfg, nlohmann::json::object()).empty());
}

TEST_CASE("random patches: valid ones apply exactly, invalid ones leave no trace") {
    std::mt19937_64 rng(5);
    RuleConfig cfg;
    for (int i = 0; i < 2000; ++i) {
        const auto patch = random_patch(rng, 0.3);
        const RuleConfig before = cfg;
        try {
            const auto changes = apply_patch(cfg, patch);
            for (const auto& [k, v] : patch.items()) CHECK(config_field_value(cfg, k) == v);
            for (const auto& c : changes) CHECK(config_field_value(before, c.field) == c.old_value);
            CHECK(cfg.violations().empty());
        } catch (const ConfigError&) {
            CHECK(cfg == before);
        }
    }
}

TEST_CASE("load_config ignores annotation keys") {
    TempDir dir;
    write_text(dir / "c.json", R"({"calibrated_speaking_rate": 3.2, "_preview": {"t_min_s": 0.375}})");
    CHECK(load_config((dir / "c.json").string()).calibrated_speaking_rate == 3.2);
    write_text(dir / "bad.json", R"({"calibrated_speaking_rate": )");
    CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
    CHECK_THROWS_AS(load_config((dir / "none.json").string()), IoError);
    CHECK_THROWS_AS(config_from_json({{"_preview", 1}}), ConfigError);
}
