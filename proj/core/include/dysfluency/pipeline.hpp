#pragma once

#include "dysfluency/audio.hpp"
#include "dysfluency/config.hpp"
#include "dysfluency/detectors.hpp"
#include "dysfluency/events.hpp"
#include "dysfluency/features.hpp"

#include <optional>
#include <string>

namespace dysfluency {

/// Everything derived from a recording before any rule runs.
struct Analysis {
    Preprocessed canonical;
    VadMask vad;
    std::optional<FeatureSet> features;  // empty when the buffer is shorter than one frame
    double raw_duration_s = 0.0;
};

Analysis analyze(const AudioBuffer& raw, const RuleConfig& cfg);

/// Candidate events of every detector, before cascade resolution. Word
/// repetitions are skipped when `alignment` is null.
std::vector<DysfluencyEvent> run_detectors(const Analysis& analysis, const RuleConfig& cfg,
                                           const WordAlignment* alignment = nullptr);

/// analyze -> detectors -> cascade, with ids assigned in time order.
EventReport build_report(const Analysis& analysis, const RuleConfig& cfg, const WordAlignment* alignment,
                         std::string recording_id);

EventReport detect(const AudioBuffer& raw, const RuleConfig& cfg, const WordAlignment* alignment = nullptr,
                   std::string recording_id = {});

}  // namespace dysfluency
