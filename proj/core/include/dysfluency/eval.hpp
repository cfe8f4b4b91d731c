#pragma once

#include "dysfluency/config.hpp"
#include "dysfluency/events.hpp"
#include "dysfluency/synthgen.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace dysfluency {

inline constexpr double kDefaultIou = 0.5;

double interval_iou(double a_start, double a_end, double b_start, double b_end);

struct MatchedPair {
    std::string recording_id;
    std::size_t hyp = 0;  // index into the hypothesis set
    std::size_t ref = 0;  // index into the reference set
    double iou = 0.0;
};

/// One-to-one matching: same-kind pairs with IoU >= iou_min are taken in
/// descending IoU order (ties by hyp then ref index) while both ends are free.
std::vector<MatchedPair> greedy_match(const AnnotationSet& hyp, const AnnotationSet& ref, double iou_min);

struct KindScore {
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;

    /// Fills precision/recall/f1 from the counts; 0/0 gives 0.
    void finish();
};

struct EvalReport {
    double iou_min = kDefaultIou;
    std::array<KindScore, 4> per_kind{};  // indexed by EventKind
    KindScore overall;                    // micro average
    std::vector<MatchedPair> matches;
    std::size_t recordings = 0;

    const KindScore& of(EventKind kind) const { return per_kind[static_cast<std::size_t>(kind)]; }
};

/// Throws FormatError when the recording ids differ.
EvalReport score(const AnnotationSet& hyp, const AnnotationSet& ref, double iou_min = kDefaultIou);

/// Pairs recordings by id; a recording missing on one side counts entirely as
/// misses or false alarms.
EvalReport score_corpus(const std::vector<AnnotationSet>& hyp, const std::vector<AnnotationSet>& ref,
                        double iou_min = kDefaultIou);

/// Fixed-length clip mode: a clip is positive for a kind iff any event of that
/// kind intersects it. Counts are per (clip, kind).
EvalReport score_clips(const AnnotationSet& hyp, const AnnotationSet& ref, double duration_s, double clip_s = 3.0);

nlohmann::json eval_to_json(const EvalReport& report);
std::string eval_to_text(const EvalReport& report);
std::string eval_to_csv(const EvalReport& report);

// ---- synthetic experiments ---------------------------------------------------

struct CorpusRun {
    std::vector<AnnotationSet> hypotheses;
    std::vector<AnnotationSet> references;
    std::vector<EventReport> reports;
};

/// Generates each spec and runs the full pipeline (with the generated word
/// alignment when `use_alignment`).
CorpusRun run_corpus(const std::vector<SynthSpec>& specs, const RuleConfig& cfg, bool use_alignment = true);

struct SweepRow {
    double scale = 1.0;
    double f1_normalized = 0.0;
    double f1_fixed = 0.0;
};

/// For each time scale: generate, detect with rate normalization on and off,
/// and score `kind` F1 over the corpus. Features are computed once per scale.
std::vector<SweepRow> rate_sweep(const std::vector<SynthSpec>& specs, const std::vector<double>& scales,
                                 const RuleConfig& cfg, EventKind kind = EventKind::Prolongation,
                                 double iou_min = kDefaultIou);

/// Two rows (normalized, fixed) by one column per scale.
std::string sweep_to_text(const std::vector<SweepRow>& rows);
nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows);

}  // namespace dysfluency
