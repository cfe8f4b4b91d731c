#include "dysfluency/session_store.hpp"

#include "dysfluency/errors.hpp"
#include "dysfluency/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

namespace dysfluency {

namespace fs = std::filesystem;

namespace {

std::string now_utc() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

std::string random_id() {
    static std::mutex m;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(m);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomic(const fs::path& p, std::string_view data) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw IoError("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, p);
}

void append_lines(const fs::path& p, const std::vector<nlohmann::json>& lines) {
    std::ofstream out(p, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to '" + p.string() + "'");
    for (const auto& j : lines) out << j.dump() << '\n';
    out.flush();
    if (!out) throw IoError("failed appending to '" + p.string() + "'");
}

std::vector<nlohmann::json> read_lines(const fs::path& p) {
    std::vector<nlohmann::json> out;
    std::ifstream in(p);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    }
    return out;
}

// Fields that change the feature extraction rather than only the rules.
bool same_analysis(const RuleConfig& a, const RuleConfig& b) {
    return a.vad_floor_percentile == b.vad_floor_percentile && a.vad_margin_db == b.vad_margin_db &&
           a.vad_hangover_s == b.vad_hangover_s && a.f0_min_hz == b.f0_min_hz && a.f0_max_hz == b.f0_max_hz &&
           a.voicing_threshold == b.voicing_threshold && a.syllable_band_low_hz == b.syllable_band_low_hz &&
           a.syllable_band_high_hz == b.syllable_band_high_hz && a.syllable_smoothing_s == b.syllable_smoothing_s &&
           a.syllable_prominence_db == b.syllable_prominence_db &&
           a.syllable_min_separation_s == b.syllable_min_separation_s && a.min_speech_s == b.min_speech_s &&
           a.rate_min == b.rate_min && a.rate_max == b.rate_max &&
           a.calibrated_speaking_rate == b.calibrated_speaking_rate;
}

}  // namespace

// ---- records -----------------------------------------------------------------

nlohmann::json audit_to_json(const AuditEntry& e) {
    return {{"timestamp", e.timestamp}, {"batch", e.batch}, {"field", e.field},
            {"old", e.old_value},       {"new", e.new_value}, {"author", e.author}};
}

AuditEntry audit_from_json(const nlohmann::json& j) {
    return {j.at("timestamp").get<std::string>(), j.at("batch").get<std::string>(), j.at("field").get<std::string>(),
            j.at("old"), j.at("new"), j.value("author", std::string{})};
}

RuleConfig replay_audit(const RuleConfig& initial, const std::vector<AuditEntry>& log) {
    RuleConfig cfg = initial;
    std::size_t i = 0;
    while (i < log.size()) {
        nlohmann::json batch = nlohmann::json::object();
        const std::string& id = log[i].batch;
        while (i < log.size() && log[i].batch == id) {
            batch[log[i].field] = log[i].new_value;
            ++i;
        }
        cfg = config_from_json(batch, cfg);
    }
    return cfg;
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Accepted: return "accepted";
    case Verdict::Rejected: return "rejected";
    case Verdict::Retyped: return "retyped";
    }
    return "?";
}

Verdict parse_verdict(std::string_view text) {
    if (text == "accepted" || text == "accept") return Verdict::Accepted;
    if (text == "rejected" || text == "reject") return Verdict::Rejected;
    if (text == "retyped" || text == "retype") return Verdict::Retyped;
    throw FormatError("unknown verdict '" + std::string(text) + "' (accepted, rejected, retyped)");
}

nlohmann::json feedback_to_json(const FeedbackEntry& e) {
    nlohmann::json j = {{"event_id", e.event_id},
                        {"report_version", e.report_version},
                        {"verdict", verdict_name(e.verdict)},
                        {"author", e.author},
                        {"timestamp", e.timestamp},
                        {"note", e.note},
                        {"stale", e.stale}};
    if (e.retyped_as) j["retyped_as"] = kind_name(*e.retyped_as);
    return j;
}

FeedbackEntry feedback_from_json(const nlohmann::json& j) {
    FeedbackEntry e;
    e.event_id = j.at("event_id").get<std::string>();
    e.report_version = j.value("report_version", std::string{});
    e.verdict = parse_verdict(j.at("verdict").get<std::string>());
    if (j.contains("retyped_as") && !j.at("retyped_as").is_null()) {
        e.retyped_as = parse_kind(j.at("retyped_as").get<std::string>());
    }
    e.author = j.value("author", std::string{});
    e.timestamp = j.value("timestamp", std::string{});
    e.note = j.value("note", std::string{});
    return e;
}

WaveformPeaks waveform_peaks(std::span<const double> samples, int sample_rate, std::size_t points) {
    if (points < 2) throw std::invalid_argument("waveform: points must be >= 2");
    WaveformPeaks w;
    w.sample_rate = sample_rate;
    w.duration_s = sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    const std::size_t n = samples.size();
    if (n == 0) return w;
    points = std::min(points, n);
    w.peaks.reserve(points);
    for (std::size_t b = 0; b < points; ++b) {
        const std::size_t lo = b * n / points, hi = std::max(lo + 1, (b + 1) * n / points);
        const auto [mn, mx] = std::minmax_element(samples.begin() + static_cast<std::ptrdiff_t>(lo),
                                                  samples.begin() + static_cast<std::ptrdiff_t>(hi));
        w.peaks.emplace_back(*mn, *mx);
    }
    return w;
}

nlohmann::json session_to_json(const SessionView& s) {
    return {{"id", s.id},
            {"created", s.created},
            {"duration_s", s.duration_s},
            {"sample_rate", s.sample_rate},
            {"has_alignment", s.has_alignment},
            {"version", s.report.version},
            {"initial_config", config_to_json(s.initial_config)},
            {"config", config_to_json(s.config)},
            {"counts", report_to_json(s.report).at("counts")},
            {"speaking_rate", s.report.speaking_rate ? nlohmann::json(*s.report.speaking_rate) : nlohmann::json()},
            {"audit_entries", s.audit_entries},
            {"feedback_entries", s.feedback_entries}};
}

// ---- sessions ----------------------------------------------------------------

struct SessionStore::Session {
    struct State {
        RuleConfig config;
        EventReport report;
        std::vector<AuditEntry> audit;
        std::vector<FeedbackEntry> feedback;
    };

    std::string id;
    fs::path dir;
    std::string created;
    RuleConfig initial;
    AudioBuffer audio;
    std::optional<WordAlignment> alignment;

    std::mutex write_mutex;
    std::uint64_t versions = 0;
    std::uint64_t batches = 0;
    std::shared_ptr<const Analysis> analysis;
    RuleConfig analysis_config;

    mutable std::mutex snap_mutex;
    std::shared_ptr<const State> state;

    std::shared_ptr<const State> snapshot() const {
        std::lock_guard lock(snap_mutex);
        return state;
    }
    void publish(std::shared_ptr<const State> next) {
        std::lock_guard lock(snap_mutex);
        state = std::move(next);
    }

    // Caller holds write_mutex.
    EventReport run(const RuleConfig& cfg) {
        if (!analysis || !same_analysis(analysis_config, cfg)) {
            analysis = std::make_shared<const Analysis>(dysfluency::analyze(audio, cfg));
            analysis_config = cfg;
        }
        EventReport r = build_report(*analysis, cfg, alignment ? &*alignment : nullptr, id);
        r.version = "r" + std::to_string(++versions);
        return r;
    }

    void save_meta() const {
        const nlohmann::json meta = {{"id", id}, {"created", created}, {"versions", versions}, {"batches", batches}};
        write_atomic(dir / "meta.json", meta.dump(2));
    }
    void save_state(const State& s) const {
        write_atomic(dir / "config.json", config_to_json(s.config).dump(2));
        write_atomic(dir / "report.json", report_to_json(s.report).dump(2));
    }
};

SessionStore::SessionStore(fs::path root, StoreOptions opts) : root_(std::move(root)), opts_(opts) {
    fs::create_directories(root_);
    load_existing();
}

SessionStore::~SessionStore() = default;

void SessionStore::load_existing() {
    for (const auto& entry : fs::directory_iterator(root_)) {
        if (!entry.is_directory() || !fs::exists(entry.path() / "meta.json")) continue;
        auto s = std::make_shared<Session>();
        s->dir = entry.path();
        const auto meta = nlohmann::json::parse(read_file(s->dir / "meta.json"));
        s->id = meta.at("id").get<std::string>();
        s->created = meta.value("created", std::string{});
        s->versions = meta.value("versions", std::uint64_t{0});
        s->batches = meta.value("batches", std::uint64_t{0});
        s->initial = config_from_json(nlohmann::json::parse(read_file(s->dir / "initial_config.json")));
        const std::string wav = read_file(s->dir / "audio.wav");
        s->audio = decode_wav({reinterpret_cast<const std::uint8_t*>(wav.data()), wav.size()},
                              (s->dir / "audio.wav").string());
        if (fs::exists(s->dir / "alignment.csv")) s->alignment = load_alignment(s->dir / "alignment.csv");

        auto st = std::make_shared<Session::State>();
        st->config = config_from_json(nlohmann::json::parse(read_file(s->dir / "config.json")));
        st->report = report_from_json(nlohmann::json::parse(read_file(s->dir / "report.json")));
        for (const auto& j : read_lines(s->dir / "audit.jsonl")) st->audit.push_back(audit_from_json(j));
        for (const auto& j : read_lines(s->dir / "feedback.jsonl")) st->feedback.push_back(feedback_from_json(j));
        s->state = std::move(st);
        sessions_[s->id] = std::move(s);
    }
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
    return it->second;
}

std::string SessionStore::create(std::span<const std::uint8_t> wav, const std::optional<WordAlignment>& alignment,
                                 const std::optional<RuleConfig>& config) {
    if (wav.size() > opts_.max_upload_bytes) {
        throw PayloadTooLargeError("upload of " + std::to_string(wav.size()) + " bytes exceeds the " +
                                   std::to_string(opts_.max_upload_bytes) + " byte cap");
    }
    auto s = std::make_shared<Session>();
    s->audio = decode_wav(wav, "upload");
    if (alignment) validate_alignment(*alignment);
    s->alignment = alignment;
    s->initial = config.value_or(RuleConfig{});
    s->initial.validate();
    s->created = now_utc();

    auto st = std::make_shared<Session::State>();
    st->config = s->initial;
    {
        std::lock_guard lock(s->write_mutex);
        st->report = s->run(st->config);
    }

    std::string id;
    {
        std::unique_lock lock(map_mutex_);
        do {
            id = random_id();
        } while (sessions_.count(id) || fs::exists(root_ / id));
        s->id = id;
        st->report.recording_id = id;
        s->dir = root_ / id;
        const fs::path staging = root_ / (id + ".staging");
        fs::create_directories(staging);
        try {
            write_atomic(staging / "audio.wav", {reinterpret_cast<const char*>(wav.data()), wav.size()});
            if (alignment) {
                std::ostringstream a;
                write_alignment_csv(a, *alignment);
                write_atomic(staging / "alignment.csv", a.str());
            }
            write_atomic(staging / "initial_config.json", config_to_json(s->initial).dump(2));
            write_atomic(staging / "config.json", config_to_json(st->config).dump(2));
            write_atomic(staging / "report.json", report_to_json(st->report).dump(2));
            write_atomic(staging / "audit.jsonl", "");
            write_atomic(staging / "feedback.jsonl", "");
            const nlohmann::json meta = {{"id", id}, {"created", s->created}, {"versions", s->versions}, {"batches", 0}};
            write_atomic(staging / "meta.json", meta.dump(2));
            fs::rename(staging, s->dir);
        } catch (...) {
            std::error_code ec;
            fs::remove_all(staging, ec);
            throw;
        }
        s->state = std::move(st);
        sessions_[id] = s;
    }
    return id;
}

std::vector<std::string> SessionStore::list() const {
    std::shared_lock lock(map_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : sessions_) ids.push_back(id);
    return ids;
}

SessionView SessionStore::get(const std::string& id) const {
    const auto s = find(id);
    const auto st = s->snapshot();
    SessionView v;
    v.id = s->id;
    v.created = s->created;
    v.initial_config = s->initial;
    v.config = st->config;
    v.report = st->report;
    v.audit_entries = st->audit.size();
    v.feedback_entries = st->feedback.size();
    v.duration_s = s->audio.duration_s();
    v.sample_rate = s->audio.sample_rate;
    v.has_alignment = s->alignment.has_value();
    return v;
}

EventReport SessionStore::report(const std::string& id) const { return find(id)->snapshot()->report; }

EventReport SessionStore::detect(const std::string& id) {
    const auto s = find(id);
    std::lock_guard lock(s->write_mutex);
    auto next = std::make_shared<Session::State>(*s->snapshot());
    next->report = s->run(next->config);
    s->save_state(*next);
    s->save_meta();
    EventReport out = next->report;
    s->publish(std::move(next));
    return out;
}

SessionStore::PatchResult SessionStore::patch(const std::string& id, const nlohmann::json& patch,
                                              const std::string& author) {
    const auto s = find(id);
    std::lock_guard lock(s->write_mutex);
    const auto current = s->snapshot();
    RuleConfig cfg = current->config;
    const auto changes = apply_patch(cfg, patch);  // throws before anything is touched

    PatchResult result;
    if (changes.empty()) {
        result.report = current->report;
        return result;
    }
    auto next = std::make_shared<Session::State>(*current);
    next->config = cfg;
    next->report = s->run(cfg);
    const std::string stamp = now_utc();
    const std::string batch = "b" + std::to_string(++s->batches);
    std::vector<nlohmann::json> lines;
    for (const auto& c : changes) {
        AuditEntry e{stamp, batch, c.field, c.old_value, c.new_value, author};
        lines.push_back(audit_to_json(e));
        next->audit.push_back(e);
        result.entries.push_back(std::move(e));
    }
    append_lines(s->dir / "audit.jsonl", lines);
    s->save_state(*next);
    s->save_meta();
    result.report = next->report;
    s->publish(std::move(next));
    return result;
}

std::vector<AuditEntry> SessionStore::audit(const std::string& id) const { return find(id)->snapshot()->audit; }

FeedbackEntry SessionStore::add_feedback(const std::string& id, FeedbackEntry entry) {
    const auto s = find(id);
    std::lock_guard lock(s->write_mutex);
    const auto current = s->snapshot();
    const auto& report = current->report;
    if (!entry.report_version.empty() && entry.report_version != report.version) {
        throw ConflictError("report version '" + entry.report_version + "' is stale; latest is '" + report.version + "'");
    }
    const bool known = std::any_of(report.events.begin(), report.events.end(),
                                   [&](const DysfluencyEvent& e) { return e.id == entry.event_id; });
    if (!known) {
        throw ConflictError("event '" + entry.event_id + "' is not in report " + report.version);
    }
    if (entry.verdict == Verdict::Retyped && !entry.retyped_as) {
        throw FormatError("a retyped verdict needs the new kind");
    }
    entry.report_version = report.version;
    entry.timestamp = now_utc();
    entry.stale = false;
    append_lines(s->dir / "feedback.jsonl", {feedback_to_json(entry)});
    auto next = std::make_shared<Session::State>(*current);
    next->feedback.push_back(entry);
    s->publish(std::move(next));
    return entry;
}

std::vector<FeedbackEntry> SessionStore::feedback(const std::string& id) const {
    const auto st = find(id)->snapshot();
    std::vector<FeedbackEntry> out = st->feedback;
    for (auto& e : out) e.stale = e.report_version != st->report.version;
    return out;
}

WaveformPeaks SessionStore::waveform(const std::string& id, std::size_t points) const {
    const auto s = find(id);
    return waveform_peaks(s->audio.samples, s->audio.sample_rate, points);
}

}  // namespace dysfluency
