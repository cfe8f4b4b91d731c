#include "dysfluency/cascade.hpp"

#include <algorithm>
#include <tuple>

namespace dysfluency {

namespace {

bool earlier(const DysfluencyEvent& a, const DysfluencyEvent& b) {
    return std::tuple(a.start_s, a.end_s, -precedence(a.kind)) < std::tuple(b.start_s, b.end_s, -precedence(b.kind));
}

double overlap(const DysfluencyEvent& a, const DysfluencyEvent& b) {
    return std::max(0.0, std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s));
}

bool collides(const DysfluencyEvent& a, const DysfluencyEvent& b, double gate) {
    const double shorter = std::min(a.duration(), b.duration());
    return overlap(a, b) >= gate * shorter && overlap(a, b) > 0.0;
}

double merged_count(const DysfluencyEvent& e) {
    return e.evidence.has("merged_count") ? e.evidence.number("merged_count") : 1.0;
}

std::vector<DysfluencyEvent> merge_kind(std::vector<DysfluencyEvent> events, double min_sep) {
    std::sort(events.begin(), events.end(), earlier);
    std::vector<DysfluencyEvent> out;
    for (auto& ev : events) {
        if (out.empty() || ev.start_s - out.back().end_s >= min_sep) {
            out.push_back(std::move(ev));
            continue;
        }
        auto& cur = out.back();
        const double count = merged_count(cur) + merged_count(ev);
        const double start = std::min(cur.start_s, ev.start_s);
        const double end = std::max(cur.end_s, ev.end_s);
        if (ev.confidence > cur.confidence) {
            cur.evidence = std::move(ev.evidence);
            cur.confidence = ev.confidence;
            cur.id = std::move(ev.id);
        }
        cur.start_s = start;
        cur.end_s = end;
        cur.evidence.set("merged_count", count);
    }
    return out;
}

}  // namespace

std::vector<DysfluencyEvent> resolve(std::vector<DysfluencyEvent> candidates, const RuleConfig& cfg) {
    std::vector<DysfluencyEvent> merged;
    for (EventKind kind : kAllKinds) {
        std::vector<DysfluencyEvent> same;
        for (const auto& ev : candidates) {
            if (ev.kind == kind) same.push_back(ev);
        }
        for (auto& ev : merge_kind(std::move(same), cfg.min_separation_s)) merged.push_back(std::move(ev));
    }

    std::stable_sort(merged.begin(), merged.end(), [](const DysfluencyEvent& a, const DysfluencyEvent& b) {
        if (precedence(a.kind) != precedence(b.kind)) return precedence(a.kind) > precedence(b.kind);
        return earlier(a, b);
    });
    std::vector<DysfluencyEvent> kept;
    for (auto& ev : merged) {
        const bool blocked = std::any_of(kept.begin(), kept.end(), [&](const DysfluencyEvent& k) {
            return k.kind != ev.kind && collides(k, ev, cfg.overlap_gate);
        });
        if (!blocked) kept.push_back(std::move(ev));
    }
    std::stable_sort(kept.begin(), kept.end(), earlier);
    return kept;
}

std::vector<std::string> report_violations(const std::vector<DysfluencyEvent>& events, const RuleConfig& cfg) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& a = events[i];
        if (!(a.start_s < a.end_s)) out.push_back("event " + std::to_string(i) + " has start >= end");
        if (!(a.confidence >= 0.0 && a.confidence <= 1.0)) out.push_back("event " + std::to_string(i) + " confidence outside [0, 1]");
        if (i > 0 && events[i - 1].start_s > a.start_s) out.push_back("events not sorted at " + std::to_string(i));
        for (std::size_t j = i + 1; j < events.size(); ++j) {
            const auto& b = events[j];
            if (a.kind == b.kind) {
                const double gap = std::max(a.start_s, b.start_s) - std::min(a.end_s, b.end_s);
                if (gap < cfg.min_separation_s) {
                    out.push_back("same-kind events " + std::to_string(i) + " and " + std::to_string(j) +
                                  " closer than min_separation_s");
                }
            } else if (collides(a, b, cfg.overlap_gate)) {
                out.push_back("events " + std::to_string(i) + " and " + std::to_string(j) +
                              " overlap beyond the gate");
            }
        }
    }
    return out;
}

}  // namespace dysfluency
