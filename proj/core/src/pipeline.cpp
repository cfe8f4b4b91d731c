#include "dysfluency/pipeline.hpp"

#include "dysfluency/cascade.hpp"

#include <cstdio>

namespace dysfluency {

Analysis analyze(const AudioBuffer& raw, const RuleConfig& cfg) {
    cfg.validate();
    Analysis a;
    a.raw_duration_s = raw.duration_s();
    a.canonical = preprocess(raw);
    a.vad = compute_vad(a.canonical.audio, cfg);
    if (frame_count(a.canonical.audio.size()) > 0) a.features = extract_features(a.canonical.audio, a.vad, cfg);
    return a;
}

std::vector<DysfluencyEvent> run_detectors(const Analysis& analysis, const RuleConfig& cfg,
                                           const WordAlignment* alignment) {
    std::vector<DysfluencyEvent> all;
    if (!analysis.features) return all;
    const FeatureSet& fs = *analysis.features;
    const auto append = [&](std::vector<DysfluencyEvent> events) {
        for (auto& e : events) all.push_back(std::move(e));
    };
    append(detect_prolongations(fs, cfg));
    append(detect_sound_repetitions(fs, cfg));
    if (alignment) append(detect_word_repetitions(fs, *alignment, cfg));
    append(detect_blocks(fs, analysis.vad, cfg));
    return all;
}

EventReport build_report(const Analysis& analysis, const RuleConfig& cfg, const WordAlignment* alignment,
                         std::string recording_id) {
    EventReport r;
    r.recording_id = std::move(recording_id);
    r.config = cfg;
    r.duration_s = analysis.raw_duration_s;
    r.silent_input = analysis.canonical.silent;
    if (analysis.features) r.speaking_rate = analysis.features->speaking_rate;
    r.events = resolve(run_detectors(analysis, cfg, alignment), cfg);
    for (std::size_t i = 0; i < r.events.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "ev-%03zu", i + 1);
        r.events[i].id = id;
    }
    return r;
}

EventReport detect(const AudioBuffer& raw, const RuleConfig& cfg, const WordAlignment* alignment,
                   std::string recording_id) {
    return build_report(analyze(raw, cfg), cfg, alignment, std::move(recording_id));
}

}  // namespace dysfluency
