#pragma once

#include <nlohmann/json.hpp>

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dysfluency {

/// Every threshold and parameter of the feature extractors and the rule
/// cascade. Serialized as a flat JSON object whose keys are the field names.
struct RuleConfig {
    // Prolongation (rate-normalized stationarity).
    double alpha = 1.2;                 // syllable periods
    double theta_sim = 0.92;            // MFCC frame correlation
    double theta_f0 = 15.0;             // Hz
    double theta_hnr = 10.0;            // dB
    bool rate_normalization_enabled = true;
    double fixed_t_min_s = 0.25;        // used when normalization is off
    double calibrated_speaking_rate = 0.0;  // syll/s; 0 = estimate per recording

    // Sound repetition (DTW over window halves, ACF refinement).
    int dtw_window_frames = 30;
    double theta_dtw = 0.3;
    int rep_min_cycles = 2;
    double rep_min_modulation_db = 3.0;
    double acf_weight_energy = 1.0 / 3.0;
    double acf_weight_flux = 1.0 / 3.0;
    double acf_weight_centroid = 1.0 / 3.0;
    double theta_r = 0.5;
    double acf_lag_min_s = 0.05;
    double acf_lag_max_s = 0.40;
    double acf_window_s = 0.50;

    // Word repetition (alignment driven).
    double theta_word_dtw = 0.5;
    double word_window_s = 1.5;

    // Blocks.
    double block_silence_s = 0.35;
    double block_preflux_s = 0.10;
    double block_flux_percentile = 0.90;
    double audible_block_rms_db = -30.0;  // relative to median speech-frame RMS
    double audible_block_centroid_hz = 2000.0;
    double audible_block_min_s = 0.20;

    // Cascade.
    double min_separation_s = 0.10;
    double overlap_gate = 0.30;

    // Voice activity.
    double vad_floor_percentile = 0.05;
    double vad_margin_db = 6.0;
    double vad_hangover_s = 0.20;
    double max_internal_silence_s = 2.0;

    // Pitch / voicing.
    double f0_min_hz = 50.0;
    double f0_max_hz = 400.0;
    double voicing_threshold = 0.3;

    // Syllable nuclei / speaking rate.
    double syllable_band_low_hz = 300.0;
    double syllable_band_high_hz = 2500.0;
    double syllable_smoothing_s = 0.05;
    double syllable_prominence_db = 3.0;
    double syllable_min_separation_s = 0.12;
    double min_speech_s = 0.5;
    double rate_min = 0.5;
    double rate_max = 8.0;

    /// Human-readable descriptions of every violated invariant; empty when valid.
    std::vector<std::string> violations() const;
    /// Throws ConfigError listing the violations.
    void validate() const;

    bool operator==(const RuleConfig&) const = default;
};

using ConfigField = std::variant<double RuleConfig::*, int RuleConfig::*, bool RuleConfig::*>;

struct ConfigFieldInfo {
    std::string_view name;
    ConfigField member;
};

/// The 1:1 map between JSON keys and RuleConfig members.
std::span<const ConfigFieldInfo> config_fields();

nlohmann::json config_to_json(const RuleConfig& cfg);
nlohmann::json config_field_value(const RuleConfig& cfg, std::string_view field);

/// Full or partial object; unspecified fields keep the values of `base`.
/// Unknown keys and mistyped values throw ConfigError. The result is validated.
RuleConfig config_from_json(const nlohmann::json& j, const RuleConfig& base = {});

struct FieldChange {
    std::string field;
    nlohmann::json old_value;
    nlohmann::json new_value;
};

/// Applies a partial patch atomically: either every field is applied and the
/// result validates, or `cfg` is untouched and ConfigError is thrown.
/// Returns one entry per field whose value actually changed, in key order.
std::vector<FieldChange> apply_patch(RuleConfig& cfg, const nlohmann::json& patch);

/// Reads a JSON file; top-level keys starting with '_' are ignored.
RuleConfig load_config(const std::string& path);

}  // namespace dysfluency
