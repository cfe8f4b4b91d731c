#pragma once

#include "dysfluency/audio.hpp"
#include "dysfluency/config.hpp"
#include "dysfluency/detectors.hpp"
#include "dysfluency/events.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

namespace dysfluency {

struct AuditEntry {
    std::string timestamp;  // UTC, ISO 8601 with milliseconds
    std::string batch;      // shared by every field of one patch
    std::string field;
    nlohmann::json old_value;
    nlohmann::json new_value;
    std::string author;
};

nlohmann::json audit_to_json(const AuditEntry& e);
AuditEntry audit_from_json(const nlohmann::json& j);

/// Applies the log batch by batch to `initial`.
RuleConfig replay_audit(const RuleConfig& initial, const std::vector<AuditEntry>& log);

enum class Verdict { Accepted, Rejected, Retyped };

struct FeedbackEntry {
    std::string event_id;
    std::string report_version;
    Verdict verdict = Verdict::Accepted;
    std::optional<EventKind> retyped_as;
    std::string author;
    std::string timestamp;
    std::string note;
    bool stale = false;  // the report it refers to has been superseded
};

nlohmann::json feedback_to_json(const FeedbackEntry& e);
FeedbackEntry feedback_from_json(const nlohmann::json& j);
Verdict parse_verdict(std::string_view text);
std::string_view verdict_name(Verdict v);

struct WaveformPeaks {
    int sample_rate = 0;
    double duration_s = 0.0;
    std::vector<std::pair<double, double>> peaks;  // (min, max) per bucket
};

/// Uniform-bucket min/max downsampling; `points` is clamped to the sample count.
WaveformPeaks waveform_peaks(std::span<const double> samples, int sample_rate, std::size_t points);

struct SessionView {
    std::string id;
    std::string created;
    RuleConfig initial_config;
    RuleConfig config;
    EventReport report;
    std::size_t audit_entries = 0;
    std::size_t feedback_entries = 0;
    double duration_s = 0.0;
    int sample_rate = 0;
    bool has_alignment = false;
};

nlohmann::json session_to_json(const SessionView& s);

struct StoreOptions {
    std::size_t max_upload_bytes = 64u << 20;
};

/// Sessions persisted one directory each under `root`. Sessions are
/// independent; mutations of one session are serialized while readers see the
/// last published snapshot.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path root, StoreOptions opts = {});
    ~SessionStore();
    SessionStore(const SessionStore&) = delete;
    SessionStore& operator=(const SessionStore&) = delete;

    /// Decodes `wav`, runs detection, persists. Nothing is written on error.
    std::string create(std::span<const std::uint8_t> wav, const std::optional<WordAlignment>& alignment = std::nullopt,
                       const std::optional<RuleConfig>& config = std::nullopt);

    std::vector<std::string> list() const;
    SessionView get(const std::string& id) const;
    EventReport report(const std::string& id) const;

    /// Re-runs detection under the current config (new report version).
    EventReport detect(const std::string& id);

    struct PatchResult {
        EventReport report;
        std::vector<AuditEntry> entries;
    };
    /// Atomic: on ConfigError neither config, report nor audit log change.
    PatchResult patch(const std::string& id, const nlohmann::json& patch, const std::string& author);

    std::vector<AuditEntry> audit(const std::string& id) const;

    /// Throws ConflictError when the event is not in the latest report or
    /// `report_version` (if given) is not the latest.
    FeedbackEntry add_feedback(const std::string& id, FeedbackEntry entry);
    std::vector<FeedbackEntry> feedback(const std::string& id) const;

    WaveformPeaks waveform(const std::string& id, std::size_t points) const;

    const std::filesystem::path& root() const noexcept { return root_; }
    const StoreOptions& options() const noexcept { return opts_; }

private:
    struct Session;
    std::shared_ptr<Session> find(const std::string& id) const;
    void load_existing();

    std::filesystem::path root_;
    StoreOptions opts_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace dysfluency
