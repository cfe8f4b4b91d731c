#include "dysfluency/audio.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dysfluency {

namespace {
// Anything quieter is treated as digital silence and never amplified.
constexpr double kSilenceDb = -100.0;
}  // namespace

double rms_db(std::span<const double> samples) {
    if (samples.empty()) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (double s : samples) acc += s * s;
    const double rms = std::sqrt(acc / static_cast<double>(samples.size()));
    return rms > 0.0 ? 20.0 * std::log10(rms) : -std::numeric_limits<double>::infinity();
}

LoudnessResult normalize_loudness(const AudioBuffer& audio, double target_db) {
    if (audio.empty()) throw std::invalid_argument("normalize_loudness: empty buffer");
    LoudnessResult r;
    r.input_db = rms_db(audio.samples);
    if (!(r.input_db > kSilenceDb)) {
        r.audio = audio;
        r.silent = true;
        return r;
    }
    r.gain = std::pow(10.0, (target_db - r.input_db) / 20.0);
    r.audio.sample_rate = audio.sample_rate;
    r.audio.samples.resize(audio.samples.size());
    std::transform(audio.samples.begin(), audio.samples.end(), r.audio.samples.begin(),
                   [g = r.gain](double s) { return std::clamp(s * g, -1.0, 1.0); });
    return r;
}

AudioBuffer preemphasize(const AudioBuffer& audio, double coeff) {
    if (!(coeff >= 0.0 && coeff < 1.0)) throw std::invalid_argument("preemphasize: coefficient must lie in [0, 1)");
    AudioBuffer out;
    out.sample_rate = audio.sample_rate;
    out.samples.resize(audio.samples.size());
    if (audio.empty()) return out;
    out.samples[0] = audio.samples[0];
    for (std::size_t n = 1; n < audio.samples.size(); ++n) {
        out.samples[n] = audio.samples[n] - coeff * audio.samples[n - 1];
    }
    return out;
}

Preprocessed preprocess(const AudioBuffer& raw) {
    Preprocessed p;
    const AudioBuffer canonical = resample(raw, kCanonicalSampleRate);
    if (canonical.empty()) {
        p.audio = canonical;
        p.silent = true;
        return p;
    }
    auto loud = normalize_loudness(canonical, kTargetLoudnessDb);
    p.gain = loud.gain;
    p.silent = loud.silent;
    p.audio = preemphasize(loud.audio, kPreemphasisCoeff);
    return p;
}

}  // namespace dysfluency
