#pragma once

#include "dysfluency/config.hpp"
#include "dysfluency/framing.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dysfluency {

inline constexpr double kTargetLoudnessDb = -20.0;
inline constexpr double kPreemphasisCoeff = 0.97;

/// Mono samples in [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = kCanonicalSampleRate;

    double duration_s() const noexcept {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
};

// ---- WAV -------------------------------------------------------------------

/// Reads a RIFF/WAVE file: PCM 8/16/24/32-bit or IEEE float 32/64-bit,
/// mono or multichannel (mixed to mono by channel mean).
AudioBuffer load_audio(const std::filesystem::path& path);

/// Same as load_audio, for an in-memory file. `origin` is used in messages.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes, std::string_view origin = "<memory>");

/// 32-bit float mono WAV.
std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

// ---- preprocessing -----------------------------------------------------------

/// Band-limited rational-ratio resampling (Kaiser-windowed sinc, beta 8,
/// 64 taps at the lower of the two rates, polyphase table).
AudioBuffer resample(const AudioBuffer& audio, int target_hz);

/// RMS level in dBFS; -inf for silence.
double rms_db(std::span<const double> samples);

struct LoudnessResult {
    AudioBuffer audio;
    double gain = 1.0;
    double input_db = 0.0;
    bool silent = false;  // input had no energy; returned unchanged
};

/// Scales to `target_db` RMS dBFS (loudness approximated by wideband RMS).
LoudnessResult normalize_loudness(const AudioBuffer& audio, double target_db = kTargetLoudnessDb);

/// y[0] = x[0], y[n] = x[n] - coeff * x[n-1]. Requires 0 <= coeff < 1.
AudioBuffer preemphasize(const AudioBuffer& audio, double coeff = kPreemphasisCoeff);

struct Preprocessed {
    AudioBuffer audio;  // canonical: 16 kHz, -20 dB RMS, pre-emphasized
    double gain = 1.0;
    bool silent = false;
};

/// resample -> normalize_loudness -> preemphasize.
Preprocessed preprocess(const AudioBuffer& raw);

// ---- voice activity ----------------------------------------------------------

/// Per-frame speech decision on the canonical framing.
struct VadMask {
    std::vector<std::uint8_t> speech;  // 1 = speech
    double hop_s = kHopSeconds;
    double window_s = kWindowSeconds;
    double floor_db = 0.0;      // noise-floor estimate
    double threshold_db = 0.0;  // floor + margin

    std::size_t size() const noexcept { return speech.size(); }
    bool operator[](std::size_t i) const noexcept { return speech[i] != 0; }
    std::size_t speech_frames() const noexcept;
};

struct TimeSpan {
    double start_s = 0.0;
    double end_s = 0.0;
    double duration() const noexcept { return end_s - start_s; }
};

/// RMS level of each canonical frame in dB (floored at -200 dB).
std::vector<double> frame_energy_db(const AudioBuffer& audio);

/// Noise floor (percentile of frame energy) and the silence threshold derived from it.
struct SilenceFloor {
    double floor_db = -200.0;
    double threshold_db = -200.0;
};
SilenceFloor estimate_silence_floor(std::span<const double> energy_db, const RuleConfig& cfg);

/// Frame energy against floor + margin, then non-speech runs shorter than the
/// hangover that sit between speech frames are bridged.
VadMask compute_vad(const AudioBuffer& audio, const RuleConfig& cfg);

/// Contiguous speech regions, each [first frame start, last frame end].
std::vector<TimeSpan> speech_regions(const VadMask& vad);

/// Regions retained at ingestion: leading and trailing silence and internal
/// silences longer than `max_internal_silence_s` are dropped; shorter pauses are
/// kept inside the surrounding region.
std::vector<TimeSpan> ingestion_regions(const VadMask& vad, double max_internal_silence_s);

}  // namespace dysfluency
