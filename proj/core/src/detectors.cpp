#include "dysfluency/detectors.hpp"

#include "dysfluency/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dysfluency {

namespace {


FrameRange frames_within(const FeatureSet& fs, double start_s, double end_s) {
    const std::size_t n = fs.frame_count();
    const double hop = fs.energy.hop_s, t0 = fs.energy.start_s;
    const double first = std::ceil((start_s - t0) / hop - 1e-9);
    const double last = std::floor((end_s - t0) / hop + 1e-9);
    FrameRange r;
    r.begin = static_cast<std::size_t>(std::clamp(first, 0.0, static_cast<double>(n)));
    r.end = static_cast<std::size_t>(std::clamp(last + 1.0, 0.0, static_cast<double>(n)));
    if (r.end < r.begin) r.end = r.begin;
    return r;
}

bool prolongation_replays(const Evidence& ev, const RuleConfig& cfg) {
    const double rate = ev.number("speaking_rate");
    const DurationGate gate = prolongation_gate(rate > 0.0 ? std::optional<double>(rate) : std::nullopt, cfg);
    return ev.number("min_sim") > cfg.theta_sim && ev.number("max_df0") < cfg.theta_f0 &&
           ev.number("min_hnr") > cfg.theta_hnr && ev.number("duration_s") > gate.t_min_s &&
           ev.number("t_min_s") == gate.t_min_s;
}

bool sound_rep_replays(const Evidence& ev, const RuleConfig& cfg) {
    return ev.number("window_frames") == static_cast<double>(cfg.dtw_window_frames) &&
           ev.number("dtw_cost") < cfg.theta_dtw && ev.number("cycle_count") >= cfg.rep_min_cycles &&
           ev.number("modulation_db") >= cfg.rep_min_modulation_db &&
           ev.number("repetition_score") > cfg.theta_r;
}

bool word_rep_replays(const Evidence& ev, const RuleConfig& cfg) {
    const std::string a = normalize_token(ev.text("matched_word"));
    const std::string b = normalize_token(ev.text("second_word"));
    return !a.empty() && a == b && ev.number("onset_gap_s") <= cfg.word_window_s &&
           ev.number("dtw_cost") < cfg.theta_word_dtw;
}

bool block_replays(const Evidence& ev, const RuleConfig& cfg) {
    const std::string variant = ev.text("variant");
    if (variant == "silent") {
        return ev.number("silence_s") > cfg.block_silence_s && ev.number("silence_s") <= cfg.max_internal_silence_s &&
               ev.number("spike_lead_s") <= cfg.block_preflux_s + 1e-9 &&
               ev.number("flux_percentile") == cfg.block_flux_percentile &&
               ev.number("preceding_flux") > ev.number("flux_threshold");
    }
    if (variant == "audible") {
        return ev.number("rms_rel_db") <= cfg.audible_block_rms_db &&
               ev.number("centroid_hz") >= cfg.audible_block_centroid_hz &&
               ev.number("duration_s") >= cfg.audible_block_min_s;
    }
    return false;
}

}  // namespace

DurationGate prolongation_gate(std::optional<double> speaking_rate, const RuleConfig& cfg) {
    if (cfg.rate_normalization_enabled && speaking_rate && *speaking_rate > 0.0) {
        return {t_min_for_rate(cfg.alpha, *speaking_rate), true};
    }
    return {cfg.fixed_t_min_s, false};
}

std::vector<DysfluencyEvent> detect_prolongations(const FeatureSet& fs, const RuleConfig& cfg) {
    std::vector<DysfluencyEvent> out;
    const std::size_t n = fs.frame_count();
    if (n < 2) return out;
    const DurationGate gate = prolongation_gate(fs.speaking_rate, cfg);
    const double rate = fs.speaking_rate.value_or(0.0);

    std::vector<double> sim(n - 1);
    std::vector<double> df0(n - 1);
    std::vector<std::uint8_t> pass(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        sim[i] = frame_correlation(fs.mfcc.row(i), fs.mfcc.row(i + 1));
        const bool voiced = fs.f0[i] > 0.0 && fs.f0[i + 1] > 0.0;
        df0[i] = voiced ? std::abs(fs.f0[i + 1] - fs.f0[i]) : 0.0;
        pass[i] = sim[i] > cfg.theta_sim && (!voiced || df0[i] < cfg.theta_f0) && fs.hnr[i] > cfg.theta_hnr;
    }

    std::size_t i = 0;
    while (i + 1 < n) {
        if (!pass[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        double sum_sim = 0.0, min_sim = 1.0, max_df0 = 0.0, min_hnr = fs.hnr[i];
        while (j + 1 < n && pass[j]) {
            sum_sim += sim[j];
            min_sim = std::min(min_sim, sim[j]);
            max_df0 = std::max(max_df0, df0[j]);
            min_hnr = std::min(min_hnr, fs.hnr[j]);
            ++j;
        }
        const std::size_t frames = j - i + 1;
        // Audio covered by the run's analysis windows.
        const double duration = static_cast<double>(frames - 1) * fs.energy.hop_s + fs.energy.window_s;
        if (duration > gate.t_min_s) {
            const double mean_sim = sum_sim / static_cast<double>(j - i);
            const double normalized = rate > 0.0 ? duration * rate : duration / gate.t_min_s * cfg.alpha;
            DysfluencyEvent ev;
            ev.kind = EventKind::Prolongation;
            ev.start_s = fs.energy.time(i) - fs.energy.window_s / 2.0;
            ev.end_s = fs.energy.time(j) + fs.energy.window_s / 2.0;
            ev.confidence = std::clamp(0.5 * (mean_sim - cfg.theta_sim) / (1.0 - cfg.theta_sim) +
                                           0.5 * std::min(1.0, (normalized - cfg.alpha) / cfg.alpha),
                                       0.0, 1.0);
            auto& e = ev.evidence;
            e.set("mean_sim", mean_sim);
            e.set("min_sim", min_sim);
            e.set("max_df0", max_df0);
            e.set("min_hnr", min_hnr);
            e.set("duration_s", duration);
            e.set("frames", static_cast<double>(frames));
            e.set("t_min_s", gate.t_min_s);
            e.set("speaking_rate", rate);
            e.set("normalized_duration", normalized);
            e.set("rate_normalized", gate.rate_normalized ? 1.0 : 0.0);
            out.push_back(std::move(ev));
        }
        i = j;
    }
    return out;
}

std::vector<DysfluencyEvent> detect_word_repetitions(const FeatureSet& fs, const WordAlignment& align,
                                                     const RuleConfig& cfg) {
    validate_alignment(align);
    std::vector<DysfluencyEvent> out;
    for (std::size_t k = 0; k + 1 < align.size(); ++k) {
        const auto& a = align[k];
        const auto& b = align[k + 1];
        const std::string word = normalize_token(a.word);
        if (word.empty() || word != normalize_token(b.word)) continue;
        const double gap = b.start_s - a.start_s;
        if (gap > cfg.word_window_s) continue;
        const FrameRange ra = frames_within(fs, a.start_s, a.end_s);
        const FrameRange rb = frames_within(fs, b.start_s, b.end_s);
        if (ra.size() == 0 || rb.size() == 0) continue;
        const DtwResult d = segment_dtw(fs, ra, rb);
        const double cost = d.normalized();
        if (!(cost < cfg.theta_word_dtw)) continue;

        DysfluencyEvent ev;
        ev.kind = EventKind::WordRep;
        ev.start_s = a.start_s;
        ev.end_s = b.end_s;
        ev.confidence = std::clamp(1.0 - cost / cfg.theta_word_dtw, 0.0, 1.0);
        auto& e = ev.evidence;
        e.set("matched_word", a.word);
        e.set("second_word", b.word);
        e.set("onset_gap_s", gap);
        e.set("dtw_cost", cost);
        e.set("path_length", static_cast<double>(d.path_length));
        out.push_back(std::move(ev));
    }
    return out;
}

bool replay_decision(const DysfluencyEvent& event, const RuleConfig& cfg) {
    try {
        switch (event.kind) {
        case EventKind::Prolongation: return prolongation_replays(event.evidence, cfg);
        case EventKind::SoundRep: return sound_rep_replays(event.evidence, cfg);
        case EventKind::WordRep: return word_rep_replays(event.evidence, cfg);
        case EventKind::Block: return block_replays(event.evidence, cfg);
        }
    } catch (const std::out_of_range&) {
        return false;
    }
    return false;
}

}  // namespace dysfluency
