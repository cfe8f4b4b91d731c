#include "dysfluency/detectors.hpp"

#include <algorithm>
#include <cmath>

namespace dysfluency {

namespace {

double percentile(std::vector<double> values, double q) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
}

void silent_blocks(const FeatureSet& fs, const VadMask& vad, const RuleConfig& cfg,
                   std::vector<DysfluencyEvent>& out) {
    const std::size_t n = std::min(fs.frame_count(), vad.size());
    const double hop = fs.energy.hop_s;
    const double flux_threshold = percentile(fs.flux.values, cfg.block_flux_percentile);

    std::size_t i = 0;
    while (i < n) {
        if (vad[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !vad[j]) ++j;
        const std::size_t run = j - i;
        const std::size_t first = i;
        i = j;
        if (first == 0 || j >= n) continue;  // leading or trailing silence

        const double silence_s = static_cast<double>(run - 1) * hop + fs.energy.window_s;
        if (!(silence_s > cfg.block_silence_s) || silence_s > cfg.max_internal_silence_s) continue;

        std::size_t spike = first;
        double spike_flux = -1.0;
        for (std::size_t k = first; k-- > 0;) {
            const double lead = static_cast<double>(first - k) * hop;
            if (lead > cfg.block_preflux_s + 1e-9) break;
            if (fs.flux[k] > spike_flux) {
                spike_flux = fs.flux[k];
                spike = k;
            }
        }
        if (!(spike_flux > flux_threshold)) continue;

        DysfluencyEvent ev;
        ev.kind = EventKind::Block;
        ev.start_s = fs.energy.time(spike) - hop / 2.0;
        ev.end_s = fs.energy.time(j - 1) + hop / 2.0;
        const double silence_margin = std::min(1.0, (silence_s - cfg.block_silence_s) / cfg.block_silence_s);
        const double flux_margin = std::min(1.0, (spike_flux - flux_threshold) / std::max(flux_threshold, 1e-9));
        ev.confidence = std::clamp(0.5 * silence_margin + 0.5 * flux_margin, 0.0, 1.0);
        auto& e = ev.evidence;
        e.set("variant", std::string("silent"));
        e.set("silence_s", silence_s);
        e.set("preceding_flux", spike_flux);
        e.set("flux_threshold", flux_threshold);
        e.set("flux_percentile", cfg.block_flux_percentile);
        e.set("spike_lead_s", static_cast<double>(first - spike) * hop);
        out.push_back(std::move(ev));
    }
}

void audible_blocks(const FeatureSet& fs, const VadMask& vad, const RuleConfig& cfg,
                    std::vector<DysfluencyEvent>& out) {
    const std::size_t n = std::min(fs.frame_count(), vad.size());
    const double hop = fs.energy.hop_s;

    std::vector<double> speech_energy;
    for (std::size_t i = 0; i < n; ++i) {
        if (vad[i] && !fs.is_silent(i)) speech_energy.push_back(fs.energy[i]);
    }
    if (speech_energy.empty()) return;
    const double median_db = percentile(speech_energy, 0.5);

    const auto candidate = [&](std::size_t i) {
        return vad[i] && !fs.is_silent(i) && fs.energy[i] - median_db <= cfg.audible_block_rms_db &&
               fs.centroid[i] >= cfg.audible_block_centroid_hz;
    };
    std::size_t i = 0;
    while (i < n) {
        if (!candidate(i)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        double max_rel = -1e300, min_centroid = 1e300;
        while (j < n && candidate(j)) {
            max_rel = std::max(max_rel, fs.energy[j] - median_db);
            min_centroid = std::min(min_centroid, fs.centroid[j]);
            ++j;
        }
        const double duration = static_cast<double>(j - i) * hop;
        if (duration >= cfg.audible_block_min_s) {
            DysfluencyEvent ev;
            ev.kind = EventKind::Block;
            ev.start_s = fs.energy.time(i) - hop / 2.0;
            ev.end_s = fs.energy.time(j - 1) + hop / 2.0;
            const double level_margin = std::min(1.0, (cfg.audible_block_rms_db - max_rel) / 10.0);
            const double duration_margin = std::min(1.0, (duration - cfg.audible_block_min_s) / cfg.audible_block_min_s);
            ev.confidence = std::clamp(0.5 + 0.25 * level_margin + 0.25 * duration_margin, 0.0, 1.0);
            auto& e = ev.evidence;
            e.set("variant", std::string("audible"));
            e.set("rms_rel_db", max_rel);
            e.set("centroid_hz", min_centroid);
            e.set("duration_s", duration);
            e.set("median_speech_db", median_db);
            out.push_back(std::move(ev));
        }
        i = j;
    }
}

}  // namespace

std::vector<DysfluencyEvent> detect_blocks(const FeatureSet& fs, const VadMask& vad, const RuleConfig& cfg) {
    std::vector<DysfluencyEvent> out;
    silent_blocks(fs, vad, cfg, out);
    audible_blocks(fs, vad, cfg, out);
    std::sort(out.begin(), out.end(), [](const DysfluencyEvent& a, const DysfluencyEvent& b) {
        return a.start_s < b.start_s;
    });
    return out;
}

}  // namespace dysfluency
