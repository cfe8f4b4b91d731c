#pragma once

#include "dysfluency/audio.hpp"
#include "dysfluency/config.hpp"
#include "dysfluency/framing.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace dysfluency {

inline constexpr std::size_t kMfccStatic = 13;
inline constexpr std::size_t kMfccDim = 3 * kMfccStatic;
inline constexpr std::size_t kMelFilters = 26;
inline constexpr std::size_t kMfccFftSize = 512;
inline constexpr std::size_t kFluxFftSize = 2048;

/// The feature pyramid of one canonical recording. Every per-frame track has
/// the same frame count; the envelope runs at the sample rate.
struct FeatureSet {
    FrameSeries mfcc;      // 39-d: c0..c12, deltas, delta-deltas
    FrameSeries f0;        // Hz, 0 = unvoiced
    FrameSeries hnr;       // dB, -10 when unvoiced
    FrameSeries centroid;  // Hz
    FrameSeries spread;    // Hz
    FrameSeries flux;      // dimensionless, [0, 1]
    FrameSeries energy;    // dB RMS
    std::vector<double> envelope;
    int envelope_rate = kCanonicalSampleRate;

    /// Syllables per second; nullopt when the recording holds too little speech.
    std::optional<double> speaking_rate;
    /// Frames at or below this energy count as silent.
    double silence_threshold_db = -200.0;

    std::size_t frame_count() const noexcept { return energy.size(); }
    bool is_silent(std::size_t frame) const noexcept { return energy[frame] <= silence_threshold_db; }
};

// ---- spectral ----------------------------------------------------------------

/// Hann window, 512-pt DFT magnitude, 26 mel filters over 0-8 kHz, log
/// (floor 1e-10), orthonormal DCT-II keeping c0..c12, then +-2-frame
/// regression deltas with edge replication. Throws std::invalid_argument for
/// buffers shorter than one window.
FrameSeries compute_mfcc(const AudioBuffer& audio);

/// Regression deltas over +-2 frames, edges replicated.
FrameSeries regression_deltas(const FrameSeries& series);

/// Pearson correlation of the 13 static coefficients of two MFCC rows;
/// 0 when either row has zero variance.
double frame_correlation(std::span<const double> a, std::span<const double> b);

struct SpectralTracks {
    FrameSeries centroid;
    FrameSeries spread;
    FrameSeries flux;
};

/// Centroid and spread from the magnitude spectrum of each Hann frame;
/// flux is the L2 norm of the rectified magnitude increase between consecutive
/// 2048-pt frames divided by the larger frame norm (0 when both frames sit at
/// or below `silence_threshold_db`).
SpectralTracks compute_spectral(const AudioBuffer& audio, double silence_threshold_db = -200.0);

/// |analytic signal| smoothed by a zero-phase 30 Hz low-pass.
std::vector<double> compute_envelope(const AudioBuffer& audio);

// ---- periodicity -------------------------------------------------------------

struct PitchOptions {
    double min_hz = 50.0;
    double max_hz = 400.0;
    double voicing_threshold = 0.3;
};

/// Per-frame normalized cross-correlation peak over the pitch lag range.
struct Periodicity {
    std::vector<double> lag;       // fractional best lag in samples; 0 when none
    std::vector<double> strength;  // NCCF value at that lag
};

Periodicity compute_periodicity(const AudioBuffer& audio, const PitchOptions& opts = {});

/// Voiced frames get 16000 / lag, others 0; then a 3-frame median.
FrameSeries compute_f0(const AudioBuffer& audio, const PitchOptions& opts = {});
FrameSeries f0_from_periodicity(const Periodicity& p, int sample_rate, const PitchOptions& opts = {});

/// 10 log10(r / (1 - r)) clamped to [-10, 40] dB on voiced frames; -10 otherwise.
FrameSeries compute_hnr(const AudioBuffer& audio, const PitchOptions& opts = {});
FrameSeries hnr_from_periodicity(const Periodicity& p, const PitchOptions& opts = {});

// ---- speaking rate -----------------------------------------------------------

struct RateEstimate {
    double rate = 0.0;            // clamped syllables per second
    double raw_rate = 0.0;        // before clamping
    std::size_t nuclei = 0;
    double speech_s = 0.0;
    std::vector<std::size_t> nucleus_frames;
};

/// Syllable nuclei: band-pass energy, smoothed, prominent peaks counted on
/// speech frames and divided by the speech duration. Throws
/// InsufficientSpeechError below cfg.min_speech_s of speech.
RateEstimate analyze_speaking_rate(const AudioBuffer& audio, const VadMask& vad, const RuleConfig& cfg);
double estimate_speaking_rate(const AudioBuffer& audio, const VadMask& vad, const RuleConfig& cfg);

/// alpha / rate.
inline double t_min_for_rate(double alpha, double rate) { return alpha / rate; }

// ---- assembly ----------------------------------------------------------------

/// Computes every track on a canonical buffer. The speaking rate is taken from
/// cfg.calibrated_speaking_rate when set, otherwise estimated (left empty if
/// speech is insufficient).
FeatureSet extract_features(const AudioBuffer& audio, const VadMask& vad, const RuleConfig& cfg);

/// One CSV per track (time_s,value...) in `dir`.
void dump_features_csv(const FeatureSet& fs, const std::filesystem::path& dir);

}  // namespace dysfluency
