#pragma once

#include "dysfluency/config.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <filesystem>
#include <istream>
#include <ostream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace dysfluency {

enum class EventKind { Prolongation, SoundRep, WordRep, Block };

inline constexpr std::array kAllKinds = {EventKind::Prolongation, EventKind::SoundRep, EventKind::WordRep,
                                         EventKind::Block};

std::string_view kind_name(EventKind kind);
/// Accepts the canonical names case-insensitively plus the short forms
/// prol, sr, wr, blk. Throws FormatError otherwise.
EventKind parse_kind(std::string_view text);

/// Higher wins when events of different kinds collide.
int precedence(EventKind kind);

/// Named measurements that fired a rule, in insertion order.
class Evidence {
public:
    using Value = std::variant<double, std::string>;

    void set(std::string name, double value);
    void set(std::string name, std::string value);

    bool has(std::string_view name) const;
    /// Throws std::out_of_range when absent or not numeric.
    double number(std::string_view name) const;
    std::string text(std::string_view name) const;

    const std::vector<std::pair<std::string, Value>>& items() const noexcept { return items_; }
    bool operator==(const Evidence&) const = default;

private:
    std::vector<std::pair<std::string, Value>> items_;
};

struct DysfluencyEvent {
    EventKind kind = EventKind::Prolongation;
    double start_s = 0.0;
    double end_s = 0.0;
    double confidence = 0.0;
    Evidence evidence;
    std::string id;  // assigned when a report is assembled

    double duration() const noexcept { return end_s - start_s; }
    bool operator==(const DysfluencyEvent&) const = default;
};

struct EventReport {
    std::string recording_id;
    std::vector<DysfluencyEvent> events;
    RuleConfig config;
    std::optional<double> speaking_rate;
    double duration_s = 0.0;
    bool silent_input = false;
    std::string version;

    std::size_t count(EventKind kind) const;
};

nlohmann::json evidence_to_json(const Evidence& ev);
Evidence evidence_from_json(const nlohmann::json& j);
nlohmann::json event_to_json(const DysfluencyEvent& ev);
DysfluencyEvent event_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const EventReport& report);
EventReport report_from_json(const nlohmann::json& j);

/// Aligned-column text for terminals.
std::string report_to_text(const EventReport& report);
/// One row per event: id,kind,start_s,end_s,confidence,evidence(json)
std::string report_to_csv(const EventReport& report);

// ---- reference annotations ---------------------------------------------------

struct Annotation {
    EventKind kind = EventKind::Prolongation;
    double start_s = 0.0;
    double end_s = 0.0;
    bool operator==(const Annotation&) const = default;
};

struct AnnotationSet {
    std::string recording_id;
    std::vector<Annotation> events;
};

AnnotationSet annotations_from_report(const EventReport& report);

/// recording_id,kind,start_s,end_s rows.
void write_annotations_csv(std::ostream& out, const std::vector<AnnotationSet>& sets);
/// Groups rows by recording id (first-seen order). Throws FormatError with the
/// line number on malformed rows.
std::vector<AnnotationSet> parse_annotations_csv(std::istream& in, std::string_view origin = "<annotations>");
std::vector<AnnotationSet> load_annotations(const std::filesystem::path& path);

}  // namespace dysfluency
