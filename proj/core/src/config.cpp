#include "dysfluency/config.hpp"

#include "dysfluency/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dysfluency {

namespace {

#define DYSFLUENCY_FIELD(name) ConfigFieldInfo{#name, &RuleConfig::name}

const std::array kFields = {
    DYSFLUENCY_FIELD(alpha),
    DYSFLUENCY_FIELD(theta_sim),
    DYSFLUENCY_FIELD(theta_f0),
    DYSFLUENCY_FIELD(theta_hnr),
    DYSFLUENCY_FIELD(rate_normalization_enabled),
    DYSFLUENCY_FIELD(fixed_t_min_s),
    DYSFLUENCY_FIELD(calibrated_speaking_rate),
    DYSFLUENCY_FIELD(dtw_window_frames),
    DYSFLUENCY_FIELD(theta_dtw),
    DYSFLUENCY_FIELD(rep_min_cycles),
    DYSFLUENCY_FIELD(rep_min_modulation_db),
    DYSFLUENCY_FIELD(acf_weight_energy),
    DYSFLUENCY_FIELD(acf_weight_flux),
    DYSFLUENCY_FIELD(acf_weight_centroid),
    DYSFLUENCY_FIELD(theta_r),
    DYSFLUENCY_FIELD(acf_lag_min_s),
    DYSFLUENCY_FIELD(acf_lag_max_s),
    DYSFLUENCY_FIELD(acf_window_s),
    DYSFLUENCY_FIELD(theta_word_dtw),
    DYSFLUENCY_FIELD(word_window_s),
    DYSFLUENCY_FIELD(block_silence_s),
    DYSFLUENCY_FIELD(block_preflux_s),
    DYSFLUENCY_FIELD(block_flux_percentile),
    DYSFLUENCY_FIELD(audible_block_rms_db),
    DYSFLUENCY_FIELD(audible_block_centroid_hz),
    DYSFLUENCY_FIELD(audible_block_min_s),
    DYSFLUENCY_FIELD(min_separation_s),
    DYSFLUENCY_FIELD(overlap_gate),
    DYSFLUENCY_FIELD(vad_floor_percentile),
    DYSFLUENCY_FIELD(vad_margin_db),
    DYSFLUENCY_FIELD(vad_hangover_s),
    DYSFLUENCY_FIELD(max_internal_silence_s),
    DYSFLUENCY_FIELD(f0_min_hz),
    DYSFLUENCY_FIELD(f0_max_hz),
    DYSFLUENCY_FIELD(voicing_threshold),
    DYSFLUENCY_FIELD(syllable_band_low_hz),
    DYSFLUENCY_FIELD(syllable_band_high_hz),
    DYSFLUENCY_FIELD(syllable_smoothing_s),
    DYSFLUENCY_FIELD(syllable_prominence_db),
    DYSFLUENCY_FIELD(syllable_min_separation_s),
    DYSFLUENCY_FIELD(min_speech_s),
    DYSFLUENCY_FIELD(rate_min),
    DYSFLUENCY_FIELD(rate_max),
};

#undef DYSFLUENCY_FIELD

const ConfigFieldInfo* find_field(std::string_view name) {
    auto it = std::find_if(kFields.begin(), kFields.end(),
                           [&](const ConfigFieldInfo& f) { return f.name == name; });
    return it == kFields.end() ? nullptr : &*it;
}

nlohmann::json get_value(const RuleConfig& cfg, const ConfigField& member) {
    return std::visit([&](auto ptr) { return nlohmann::json(cfg.*ptr); }, member);
}

void set_value(RuleConfig& cfg, const ConfigFieldInfo& field, const nlohmann::json& v) {
    const auto bad_type = [&](const char* expected) {
        return ConfigError("config field '" + std::string(field.name) + "' expects " + expected +
                           ", got " + v.dump());
    };
    if (auto p = std::get_if<double RuleConfig::*>(&field.member)) {
        if (!v.is_number()) throw bad_type("a number");
        cfg.**p = v.get<double>();
    } else if (auto p = std::get_if<int RuleConfig::*>(&field.member)) {
        if (v.is_number_integer()) {
            cfg.**p = v.get<int>();
        } else if (v.is_number_float() && std::nearbyint(v.get<double>()) == v.get<double>()) {
            cfg.**p = static_cast<int>(v.get<double>());
        } else {
            throw bad_type("an integer");
        }
    } else if (auto p = std::get_if<bool RuleConfig::*>(&field.member)) {
        if (!v.is_boolean()) throw bad_type("a boolean");
        cfg.**p = v.get<bool>();
    }
}

}  // namespace

std::span<const ConfigFieldInfo> config_fields() { return kFields; }

std::vector<std::string> RuleConfig::violations() const {
    std::vector<std::string> out;
    const auto require = [&](bool ok, const char* what) {
        if (!ok) out.emplace_back(what);
    };
    const auto finite = [](double x) { return std::isfinite(x); };

    for (const auto& f : kFields) {
        if (auto p = std::get_if<double RuleConfig::*>(&f.member); p && !finite(this->**p)) {
            out.push_back(std::string(f.name) + " must be finite");
        }
    }

    require(alpha > 0, "alpha must be > 0");
    require(theta_sim > 0 && theta_sim < 1, "theta_sim must lie in (0, 1)");
    require(theta_f0 > 0, "theta_f0 must be > 0");
    require(fixed_t_min_s > 0, "fixed_t_min_s must be > 0");
    require(calibrated_speaking_rate >= 0, "calibrated_speaking_rate must be >= 0 (0 = estimate)");

    require(dtw_window_frames >= 4, "dtw_window_frames must be >= 4");
    require(theta_dtw > 0, "theta_dtw must be > 0");
    require(rep_min_cycles >= 1, "rep_min_cycles must be >= 1");
    require(rep_min_modulation_db >= 0, "rep_min_modulation_db must be >= 0");
    require(acf_weight_energy >= 0 && acf_weight_flux >= 0 && acf_weight_centroid >= 0,
            "acf weights must be non-negative");
    require(std::abs(acf_weight_energy + acf_weight_flux + acf_weight_centroid - 1.0) < 1e-9,
            "acf weights must sum to 1");
    require(theta_r > 0, "theta_r must be > 0");
    require(acf_lag_min_s > 0 && acf_lag_min_s < acf_lag_max_s,
            "acf lag range must satisfy 0 < acf_lag_min_s < acf_lag_max_s");
    require(acf_lag_max_s < acf_window_s, "acf_lag_max_s must be shorter than acf_window_s");

    require(theta_word_dtw > 0, "theta_word_dtw must be > 0");
    require(word_window_s > 0, "word_window_s must be > 0");

    require(block_silence_s > 0, "block_silence_s must be > 0");
    require(block_preflux_s > 0, "block_preflux_s must be > 0");
    require(block_flux_percentile > 0 && block_flux_percentile < 1,
            "block_flux_percentile must lie in (0, 1)");
    require(audible_block_rms_db < 0, "audible_block_rms_db must be < 0 (relative level)");
    require(audible_block_centroid_hz > 0 && audible_block_centroid_hz < 8000,
            "audible_block_centroid_hz must lie in (0, 8000)");
    require(audible_block_min_s > 0, "audible_block_min_s must be > 0");

    require(min_separation_s > 0, "min_separation_s must be > 0");
    require(overlap_gate > 0 && overlap_gate <= 1, "overlap_gate must lie in (0, 1]");

    require(vad_floor_percentile >= 0 && vad_floor_percentile < 1,
            "vad_floor_percentile must lie in [0, 1)");
    require(vad_margin_db >= 0, "vad_margin_db must be >= 0");
    require(vad_hangover_s >= 0, "vad_hangover_s must be >= 0");
    require(max_internal_silence_s > block_silence_s,
            "max_internal_silence_s must exceed block_silence_s");

    require(f0_min_hz > 0 && f0_min_hz < f0_max_hz && f0_max_hz < 8000,
            "pitch range must satisfy 0 < f0_min_hz < f0_max_hz < 8000");
    require(voicing_threshold > 0 && voicing_threshold < 1, "voicing_threshold must lie in (0, 1)");

    require(syllable_band_low_hz > 0 && syllable_band_low_hz < syllable_band_high_hz &&
                syllable_band_high_hz < 8000,
            "syllable band must satisfy 0 < low < high < 8000");
    require(syllable_smoothing_s > 0, "syllable_smoothing_s must be > 0");
    require(syllable_prominence_db > 0, "syllable_prominence_db must be > 0");
    require(syllable_min_separation_s > 0, "syllable_min_separation_s must be > 0");
    require(min_speech_s > 0, "min_speech_s must be > 0");
    require(rate_min > 0 && rate_min < rate_max, "rate clamp must satisfy 0 < rate_min < rate_max");
    return out;
}

void RuleConfig::validate() const {
    const auto v = violations();
    if (v.empty()) return;
    std::ostringstream msg;
    msg << "invalid configuration:";
    for (const auto& s : v) msg << "\n  - " << s;
    throw ConfigError(msg.str());
}

nlohmann::json config_to_json(const RuleConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : kFields) j[std::string(f.name)] = get_value(cfg, f.member);
    return j;
}

nlohmann::json config_field_value(const RuleConfig& cfg, std::string_view field) {
    const auto* f = find_field(field);
    if (!f) throw ConfigError("unknown config field '" + std::string(field) + "'");
    return get_value(cfg, f->member);
}

RuleConfig config_from_json(const nlohmann::json& j, const RuleConfig& base) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RuleConfig cfg = base;
    for (const auto& [key, value] : j.items()) {
        const auto* f = find_field(key);
        if (!f) throw ConfigError("unknown config field '" + key + "'");
        set_value(cfg, *f, value);
    }
    cfg.validate();
    return cfg;
}

std::vector<FieldChange> apply_patch(RuleConfig& cfg, const nlohmann::json& patch) {
    RuleConfig next = config_from_json(patch, cfg);
    std::vector<FieldChange> changes;
    for (const auto& f : kFields) {
        auto before = get_value(cfg, f.member);
        auto after = get_value(next, f.member);
        if (before != after) changes.push_back({std::string(f.name), std::move(before), std::move(after)});
    }
    cfg = next;
    return changes;
}

RuleConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    // Top-level keys starting with '_' are annotations (e.g. a calibration preview).
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end();) {
            it = it.key().rfind('_', 0) == 0 ? j.erase(it) : std::next(it);
        }
    }
    return config_from_json(j);
}

}  // namespace dysfluency
