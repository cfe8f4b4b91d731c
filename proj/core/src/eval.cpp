#include "dysfluency/eval.hpp"

#include "dysfluency/errors.hpp"
#include "dysfluency/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace dysfluency {

double interval_iou(double a_start, double a_end, double b_start, double b_end) {
    const double inter = std::max(0.0, std::min(a_end, b_end) - std::max(a_start, b_start));
    const double uni = std::max(a_end, b_end) - std::min(a_start, b_start);
    return uni > 0.0 ? inter / uni : 0.0;
}

void KindScore::finish() {
    precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

std::vector<MatchedPair> greedy_match(const AnnotationSet& hyp, const AnnotationSet& ref, double iou_min) {
    std::vector<MatchedPair> candidates;
    for (std::size_t h = 0; h < hyp.events.size(); ++h) {
        for (std::size_t r = 0; r < ref.events.size(); ++r) {
            const auto& a = hyp.events[h];
            const auto& b = ref.events[r];
            if (a.kind != b.kind) continue;
            const double iou = interval_iou(a.start_s, a.end_s, b.start_s, b.end_s);
            if (iou >= iou_min && iou > 0.0) candidates.push_back({ref.recording_id, h, r, iou});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const MatchedPair& a, const MatchedPair& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        return a.hyp != b.hyp ? a.hyp < b.hyp : a.ref < b.ref;
    });
    std::vector<bool> hyp_used(hyp.events.size()), ref_used(ref.events.size());
    std::vector<MatchedPair> out;
    for (const auto& c : candidates) {
        if (hyp_used[c.hyp] || ref_used[c.ref]) continue;
        hyp_used[c.hyp] = ref_used[c.ref] = true;
        out.push_back(c);
    }
    return out;
}

namespace {

void accumulate(EvalReport& report, const AnnotationSet& hyp, const AnnotationSet& ref) {
    const auto matches = greedy_match(hyp, ref, report.iou_min);
    for (const auto& e : hyp.events) report.per_kind[static_cast<std::size_t>(e.kind)].fp++;
    for (const auto& e : ref.events) report.per_kind[static_cast<std::size_t>(e.kind)].fn++;
    for (const auto& m : matches) {
        auto& k = report.per_kind[static_cast<std::size_t>(ref.events[m.ref].kind)];
        k.tp++;
        k.fp--;
        k.fn--;
        report.matches.push_back(m);
    }
    report.recordings++;
}

void finish(EvalReport& report) {
    report.overall = {};
    for (auto& k : report.per_kind) {
        k.finish();
        report.overall.tp += k.tp;
        report.overall.fp += k.fp;
        report.overall.fn += k.fn;
    }
    report.overall.finish();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

nlohmann::json score_json(const KindScore& k) {
    return {{"tp", k.tp}, {"fp", k.fp}, {"fn", k.fn}, {"precision", k.precision}, {"recall", k.recall}, {"f1", k.f1}};
}

}  // namespace

EvalReport score(const AnnotationSet& hyp, const AnnotationSet& ref, double iou_min) {
    if (hyp.recording_id != ref.recording_id) {
        throw FormatError("cannot score '" + hyp.recording_id + "' against reference '" + ref.recording_id + "'");
    }
    EvalReport report;
    report.iou_min = iou_min;
    accumulate(report, hyp, ref);
    finish(report);
    return report;
}

EvalReport score_corpus(const std::vector<AnnotationSet>& hyp, const std::vector<AnnotationSet>& ref,
                        double iou_min) {
    EvalReport report;
    report.iou_min = iou_min;
    std::map<std::string, const AnnotationSet*> by_id;
    for (const auto& h : hyp) by_id[h.recording_id] = &h;
    std::map<std::string, bool> seen;
    for (const auto& r : ref) {
        auto it = by_id.find(r.recording_id);
        const AnnotationSet empty{r.recording_id, {}};
        accumulate(report, it == by_id.end() ? empty : *it->second, r);
        seen[r.recording_id] = true;
    }
    for (const auto& h : hyp) {
        if (!seen.count(h.recording_id)) accumulate(report, h, AnnotationSet{h.recording_id, {}});
    }
    finish(report);
    return report;
}

EvalReport score_clips(const AnnotationSet& hyp, const AnnotationSet& ref, double duration_s, double clip_s) {
    if (hyp.recording_id != ref.recording_id) {
        throw FormatError("cannot score '" + hyp.recording_id + "' against reference '" + ref.recording_id + "'");
    }
    if (!(clip_s > 0.0)) throw FormatError("clip length must be > 0");
    EvalReport report;
    report.iou_min = 0.0;
    const auto clips = static_cast<std::size_t>(std::ceil(duration_s / clip_s - 1e-9));
    const auto positive = [&](const AnnotationSet& set, EventKind kind, double a, double b) {
        return std::any_of(set.events.begin(), set.events.end(), [&](const Annotation& e) {
            return e.kind == kind && e.start_s < b && e.end_s > a;
        });
    };
    for (std::size_t c = 0; c < clips; ++c) {
        const double a = static_cast<double>(c) * clip_s, b = a + clip_s;
        for (EventKind kind : kAllKinds) {
            const bool p = positive(hyp, kind, a, b), t = positive(ref, kind, a, b);
            auto& k = report.per_kind[static_cast<std::size_t>(kind)];
            if (p && t) {
                k.tp++;
            } else if (p) {
                k.fp++;
            } else if (t) {
                k.fn++;
            }
        }
    }
    report.recordings = 1;
    finish(report);
    return report;
}

nlohmann::json eval_to_json(const EvalReport& report) {
    nlohmann::json kinds = nlohmann::json::object();
    for (EventKind k : kAllKinds) kinds[std::string(kind_name(k))] = score_json(report.of(k));
    nlohmann::json matches = nlohmann::json::array();
    for (const auto& m : report.matches) {
        matches.push_back({{"recording_id", m.recording_id}, {"hyp", m.hyp}, {"ref", m.ref}, {"iou", m.iou}});
    }
    return {{"iou_min", report.iou_min},
            {"recordings", report.recordings},
            {"per_kind", kinds},
            {"overall", score_json(report.overall)},
            {"matches", matches}};
}

std::string eval_to_text(const EvalReport& report) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-13s %6s %6s %6s %9s %7s %6s\n", "kind", "tp", "fp", "fn", "precision",
                  "recall", "f1");
    out << line;
    const auto row = [&](const std::string& name, const KindScore& k) {
        std::snprintf(line, sizeof line, "%-13s %6zu %6zu %6zu %9s %7s %6s\n", name.c_str(), k.tp, k.fp, k.fn,
                      fmt(k.precision).c_str(), fmt(k.recall).c_str(), fmt(k.f1).c_str());
        out << line;
    };
    for (EventKind k : kAllKinds) row(std::string(kind_name(k)), report.of(k));
    row("overall", report.overall);
    out << "iou_min " << fmt(report.iou_min) << ", recordings " << report.recordings << '\n';
    return out.str();
}

std::string eval_to_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "kind,tp,fp,fn,precision,recall,f1\n";
    const auto row = [&](std::string_view name, const KindScore& k) {
        out << name << ',' << k.tp << ',' << k.fp << ',' << k.fn << ',' << fmt(k.precision) << ',' << fmt(k.recall)
            << ',' << fmt(k.f1) << '\n';
    };
    for (EventKind k : kAllKinds) row(kind_name(k), report.of(k));
    row("overall", report.overall);
    return out.str();
}

// ---- synthetic experiments ---------------------------------------------------

CorpusRun run_corpus(const std::vector<SynthSpec>& specs, const RuleConfig& cfg, bool use_alignment) {
    CorpusRun run;
    for (const auto& spec : specs) {
        const SynthOutput o = generate(spec);
        EventReport report = detect(o.audio, cfg, use_alignment ? &o.alignment : nullptr, spec.id);
        run.hypotheses.push_back(annotations_from_report(report));
        run.references.push_back(o.annotations);
        run.reports.push_back(std::move(report));
    }
    return run;
}

std::vector<SweepRow> rate_sweep(const std::vector<SynthSpec>& specs, const std::vector<double>& scales,
                                 const RuleConfig& cfg, EventKind kind, double iou_min) {
    RuleConfig on = cfg, off = cfg;
    on.rate_normalization_enabled = true;
    off.rate_normalization_enabled = false;
    const auto only = [kind](AnnotationSet set) {
        std::erase_if(set.events, [kind](const Annotation& a) { return a.kind != kind; });
        return set;
    };

    std::vector<SweepRow> rows;
    for (double scale : scales) {
        if (!(scale > 0.0)) throw ConfigError("rate sweep: scales must be > 0");
        std::vector<AnnotationSet> refs, hyp_on, hyp_off;
        for (const auto& base : specs) {
            SynthSpec spec = base;
            spec.time_scale = scale;
            const SynthOutput o = generate(spec);
            const Analysis a = analyze(o.audio, on);
            hyp_on.push_back(only(annotations_from_report(build_report(a, on, &o.alignment, spec.id))));
            hyp_off.push_back(only(annotations_from_report(build_report(a, off, &o.alignment, spec.id))));
            refs.push_back(only(o.annotations));
        }
        rows.push_back({scale, score_corpus(hyp_on, refs, iou_min).overall.f1,
                        score_corpus(hyp_off, refs, iou_min).overall.f1});
    }
    return rows;
}

std::string sweep_to_text(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    char cell[32];
    out << "time scale       ";
    for (const auto& r : rows) {
        std::snprintf(cell, sizeof cell, "%8.2fx", r.scale);
        out << cell;
    }
    out << "\nrate-normalized  ";
    for (const auto& r : rows) {
        std::snprintf(cell, sizeof cell, "%9.3f", r.f1_normalized);
        out << cell;
    }
    out << "\nfixed threshold  ";
    for (const auto& r : rows) {
        std::snprintf(cell, sizeof cell, "%9.3f", r.f1_fixed);
        out << cell;
    }
    out << '\n';
    return out.str();
}

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows) {
        j.push_back({{"scale", r.scale}, {"f1_normalized", r.f1_normalized}, {"f1_fixed", r.f1_fixed}});
    }
    return j;
}

}  // namespace dysfluency
