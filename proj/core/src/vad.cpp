#include "dysfluency/audio.hpp"

#include <algorithm>
#include <cmath>

namespace dysfluency {

namespace {
constexpr double kEnergyFloorDb = -200.0;
}

std::size_t VadMask::speech_frames() const noexcept {
    return static_cast<std::size_t>(std::count(speech.begin(), speech.end(), std::uint8_t{1}));
}

std::vector<double> frame_energy_db(const AudioBuffer& audio) {
    const std::size_t frames = frame_count(audio.samples.size());
    std::vector<double> out(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        const double* x = audio.samples.data() + i * kHopSamples;
        double acc = 0.0;
        for (std::size_t n = 0; n < kWindowSamples; ++n) acc += x[n] * x[n];
        const double ms = acc / static_cast<double>(kWindowSamples);
        out[i] = ms > 0.0 ? std::max(kEnergyFloorDb, 10.0 * std::log10(ms)) : kEnergyFloorDb;
    }
    return out;
}

SilenceFloor estimate_silence_floor(std::span<const double> energy_db, const RuleConfig& cfg) {
    SilenceFloor f;
    if (energy_db.empty()) return f;
    std::vector<double> sorted(energy_db.begin(), energy_db.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = cfg.vad_floor_percentile * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    f.floor_db = sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
    f.threshold_db = f.floor_db + cfg.vad_margin_db;
    return f;
}

VadMask compute_vad(const AudioBuffer& audio, const RuleConfig& cfg) {
    const auto energy = frame_energy_db(audio);
    const auto floor = estimate_silence_floor(energy, cfg);

    VadMask vad;
    vad.floor_db = floor.floor_db;
    vad.threshold_db = floor.threshold_db;
    vad.speech.resize(energy.size());
    for (std::size_t i = 0; i < energy.size(); ++i) vad.speech[i] = energy[i] > floor.threshold_db ? 1 : 0;

    // Bridge short internal pauses; leading/trailing silence is left alone so
    // speech boundaries stay sharp.
    const auto max_bridge = static_cast<std::size_t>(std::floor(cfg.vad_hangover_s / kHopSeconds + 1e-9));
    std::size_t i = 0;
    const std::size_t n = vad.speech.size();
    while (i < n && !vad.speech[i]) ++i;
    while (i < n) {
        if (vad.speech[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !vad.speech[j]) ++j;
        if (j < n && j - i <= max_bridge) std::fill(vad.speech.begin() + i, vad.speech.begin() + j, 1);
        i = j;
    }
    return vad;
}

std::vector<TimeSpan> speech_regions(const VadMask& vad) {
    std::vector<TimeSpan> out;
    std::size_t i = 0;
    const std::size_t n = vad.size();
    while (i < n) {
        if (!vad[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && vad[j]) ++j;
        out.push_back({frame_center_s(i) - vad.hop_s / 2, frame_center_s(j - 1) + vad.hop_s / 2});
        i = j;
    }
    return out;
}

std::vector<TimeSpan> ingestion_regions(const VadMask& vad, double max_internal_silence_s) {
    std::vector<TimeSpan> out;
    for (const auto& r : speech_regions(vad)) {
        if (!out.empty() && r.start_s - out.back().end_s <= max_internal_silence_s) {
            out.back().end_s = r.end_s;
        } else {
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace dysfluency
