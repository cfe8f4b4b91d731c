#pragma once

#include "dysfluency/audio.hpp"
#include "dysfluency/config.hpp"
#include "dysfluency/events.hpp"
#include "dysfluency/features.hpp"

#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dysfluency {

// ---- word alignment ----------------------------------------------------------

struct WordToken {
    std::string word;  // as written in the source file
    double start_s = 0.0;
    double end_s = 0.0;
};

using WordAlignment = std::vector<WordToken>;

/// Case-folded with ASCII punctuation removed.
std::string normalize_token(std::string_view word);

/// Throws FormatError unless every interval has start < end and intervals are
/// time-ordered and non-overlapping.
void validate_alignment(const WordAlignment& align);

/// word,start_s,end_s rows with an optional header line.
WordAlignment parse_alignment_csv(std::istream& in, std::string_view origin = "<alignment>");
/// Long-format TextGrid; reads the tier named "words" if present, else the
/// first interval tier. Empty intervals are skipped.
WordAlignment parse_textgrid(std::istream& in, std::string_view origin = "<textgrid>");
/// Picks the parser from the extension (.TextGrid / anything else = CSV).
WordAlignment load_alignment(const std::filesystem::path& path);
void write_alignment_csv(std::ostream& out, const WordAlignment& align);

// ---- detectors ---------------------------------------------------------------

/// Minimum stationary duration that counts as a prolongation under `cfg`, and
/// whether it was derived from the speaking rate.
struct DurationGate {
    double t_min_s = 0.0;
    bool rate_normalized = false;
};
DurationGate prolongation_gate(std::optional<double> speaking_rate, const RuleConfig& cfg);

std::vector<DysfluencyEvent> detect_prolongations(const FeatureSet& fs, const RuleConfig& cfg);

struct RepetitionScore {
    double score = 0.0;
    double lag_s = 0.0;
};

/// Weighted autocorrelation of energy, flux and centroid at a shared lag,
/// maximized over the configured lag range on a window centered at `t_s`.
/// Throws std::out_of_range when `t_s` lies outside the recording.
RepetitionScore repetition_score(const FeatureSet& fs, double t_s, const RuleConfig& cfg);

/// Number of autocorrelation peaks above 0.5 in one energy window.
std::size_t count_cycles(std::span<const double> energy_db);

std::vector<DysfluencyEvent> detect_sound_repetitions(const FeatureSet& fs, const RuleConfig& cfg);
std::vector<DysfluencyEvent> detect_word_repetitions(const FeatureSet& fs, const WordAlignment& align,
                                                     const RuleConfig& cfg);
std::vector<DysfluencyEvent> detect_blocks(const FeatureSet& fs, const VadMask& vad, const RuleConfig& cfg);

/// Re-checks an event's evidence against `cfg`: true iff the rule that emitted
/// the event would fire again on exactly those measurements.
bool replay_decision(const DysfluencyEvent& event, const RuleConfig& cfg);

}  // namespace dysfluency
