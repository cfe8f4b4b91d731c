#pragma once

#include "dysfluency/audio.hpp"
#include "dysfluency/detectors.hpp"
#include "dysfluency/events.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dysfluency {

enum class SegmentType { Syllable, Prolongation, RepBurst, SilentBlock, AudibleBlock, Pause, WordRep };

struct Segment {
    SegmentType type = SegmentType::Syllable;
    double dur_s = 0.0;      // 0 on a Syllable = one jittered slot at base_rate
    int cycles = 0;          // RepBurst
    double period_s = 0.0;   // RepBurst
};

struct SynthSpec {
    std::string id = "synth";
    std::uint64_t seed = 0;
    double base_rate = 3.2;   // syllables per second at time_scale 1
    double time_scale = 1.0;  // every duration is multiplied by this
    std::vector<Segment> plan;

    /// Throws ConfigError on non-positive durations, rates, or scales.
    void validate() const;
};

struct SynthOutput {
    AudioBuffer audio;
    AnnotationSet annotations;
    WordAlignment alignment;
    std::size_t nuclei = 0;  // tone onsets planted (syllables, prolongations, word copies)
    double speech_s = 0.0;   // first onset to last offset
};

/// Deterministic per spec: same spec, same samples.
SynthOutput generate(const SynthSpec& spec);

nlohmann::json spec_to_json(const SynthSpec& spec);
/// Throws ConfigError on unknown segment types or invalid values.
SynthSpec spec_from_json(const nlohmann::json& j);
std::vector<SynthSpec> load_specs(const std::filesystem::path& path);

/// The 200-utterance acceptance corpus: every utterance mixes fluent
/// syllables with two or three planted events, balanced across kinds.
std::vector<SynthSpec> standard_corpus(std::uint64_t seed, std::size_t count = 200);
/// Utterances for the speaking-rate sweep (prolongation-heavy).
std::vector<SynthSpec> rate_sweep_corpus(std::uint64_t seed, std::size_t count = 40);
/// A long 3.2 syll/s utterance with one 420 ms prolongation in the middle.
SynthSpec trace_spec(std::uint64_t seed = 5);
/// Fluent syllables only, at `rate`.
SynthSpec fluent_spec(std::uint64_t seed, double rate, std::size_t syllables);

/// Named presets: "standard-200", "rate-sweep", "trace".
std::vector<SynthSpec> preset(const std::string& name, std::uint64_t seed);

std::vector<SynthSpec> with_time_scale(std::vector<SynthSpec> specs, double scale);

/// Writes <dir>/<id>.wav, <id>.csv and <id>.align.csv for every output.
void write_corpus(const std::filesystem::path& dir, const std::vector<SynthSpec>& specs);

}  // namespace dysfluency
