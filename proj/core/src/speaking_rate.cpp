#include "dysfluency/errors.hpp"
#include "dysfluency/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace dysfluency {

namespace {

struct Biquad {
    double b0, b1, b2, a1, a2;

    void run(std::vector<double>& x) const {
        double s1 = 0.0, s2 = 0.0;
        for (auto& v : x) {
            const double y = b0 * v + s1;
            s1 = b1 * v - a1 * y + s2;
            s2 = b2 * v - a2 * y;
            v = y;
        }
    }
};

Biquad butterworth(double cutoff_hz, double rate, bool highpass) {
    const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate;
    const double alpha = std::sin(w0) / std::numbers::sqrt2;
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    Biquad q{};
    if (highpass) {
        q.b0 = (1.0 + cw) / 2.0 / a0;
        q.b1 = -(1.0 + cw) / a0;
    } else {
        q.b0 = (1.0 - cw) / 2.0 / a0;
        q.b1 = (1.0 - cw) / a0;
    }
    q.b2 = q.b0;
    q.a1 = -2.0 * cw / a0;
    q.a2 = (1.0 - alpha) / a0;
    return q;
}

// Prominence as the height above the higher of the two lowest points reached
// before the track climbs above the peak on either side.
double prominence(std::span<const double> y, std::size_t p) {
    double left = y[p];
    for (std::size_t i = p; i-- > 0;) {
        if (y[i] > y[p]) break;
        left = std::min(left, y[i]);
    }
    double right = y[p];
    for (std::size_t i = p + 1; i < y.size(); ++i) {
        if (y[i] > y[p]) break;
        right = std::min(right, y[i]);
    }
    return y[p] - std::max(left, right);
}

}  // namespace

RateEstimate analyze_speaking_rate(const AudioBuffer& audio, const VadMask& vad, const RuleConfig& cfg) {
    RateEstimate est;
    const std::size_t frames = std::min(frame_count(audio.samples.size()), vad.size());
    std::size_t speech_frames = 0;
    for (std::size_t i = 0; i < frames; ++i) speech_frames += vad[i] ? 1 : 0;
    est.speech_s = static_cast<double>(speech_frames) * kHopSeconds;
    if (est.speech_s < cfg.min_speech_s) {
        throw InsufficientSpeechError("need at least " + std::to_string(cfg.min_speech_s) +
                                      " s of speech to estimate speaking rate, found " +
                                      std::to_string(est.speech_s) + " s");
    }

    const double rate = static_cast<double>(audio.sample_rate);
    std::vector<double> band = audio.samples;
    butterworth(cfg.syllable_band_low_hz, rate, true).run(band);
    butterworth(std::min(cfg.syllable_band_high_hz, 0.45 * rate), rate, false).run(band);

    std::vector<double> power(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const double* x = band.data() + f * kHopSamples;
        double acc = 0.0;
        for (std::size_t n = 0; n < kWindowSamples; ++n) acc += x[n] * x[n];
        power[f] = acc / static_cast<double>(kWindowSamples);
    }

    const auto width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.syllable_smoothing_s / kHopSeconds)));
    const std::size_t half = width / 2;
    std::vector<double> db(frames);
    std::vector<double> cum(frames + 1, 0.0);
    for (std::size_t f = 0; f < frames; ++f) cum[f + 1] = cum[f] + power[f];
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t lo = f >= half ? f - half : 0;
        const std::size_t hi = std::min(frames, lo + width);
        const double mean = (cum[hi] - cum[lo]) / static_cast<double>(hi - lo);
        db[f] = 10.0 * std::log10(std::max(mean, 1e-20));
    }

    std::vector<std::size_t> candidates;
    for (std::size_t f = 1; f + 1 < frames; ++f) {
        if (!vad[f]) continue;
        if (db[f] <= db[f - 1]) continue;
        // Plateaus count once, at their first frame.
        std::size_t g = f;
        while (g + 1 < frames && db[g + 1] == db[f]) ++g;
        if (g + 1 >= frames || db[g + 1] > db[f]) continue;
        if (prominence(db, f) >= cfg.syllable_prominence_db) candidates.push_back(f);
    }

    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        return db[a] != db[b] ? db[a] > db[b] : a < b;
    });
    const double min_gap = cfg.syllable_min_separation_s / kHopSeconds - 1e-9;
    std::vector<std::size_t> kept;
    for (std::size_t c : candidates) {
        const bool clear = std::none_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return std::abs(static_cast<double>(c) - static_cast<double>(k)) < min_gap;
        });
        if (clear) kept.push_back(c);
    }
    std::sort(kept.begin(), kept.end());

    est.nuclei = kept.size();
    est.nucleus_frames = std::move(kept);
    est.raw_rate = static_cast<double>(est.nuclei) / est.speech_s;
    est.rate = std::clamp(est.raw_rate, cfg.rate_min, cfg.rate_max);
    return est;
}

double estimate_speaking_rate(const AudioBuffer& audio, const VadMask& vad, const RuleConfig& cfg) {
    return analyze_speaking_rate(audio, vad, cfg).rate;
}

}  // namespace dysfluency
