#include "dysfluency/events.hpp"

#include "dysfluency/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace dysfluency {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string_view kind_name(EventKind kind) {
    switch (kind) {
    case EventKind::Prolongation: return "Prolongation";
    case EventKind::SoundRep: return "SoundRep";
    case EventKind::WordRep: return "WordRep";
    case EventKind::Block: return "Block";
    }
    return "?";
}

EventKind parse_kind(std::string_view text) {
    const std::string t = lower(text);
    if (t == "prolongation" || t == "prol") return EventKind::Prolongation;
    if (t == "soundrep" || t == "sr" || t == "sound_rep" || t == "sound-repetition") return EventKind::SoundRep;
    if (t == "wordrep" || t == "wr" || t == "word_rep" || t == "word-repetition") return EventKind::WordRep;
    if (t == "block" || t == "blk") return EventKind::Block;
    throw FormatError("unknown event kind '" + std::string(text) + "'");
}

int precedence(EventKind kind) {
    switch (kind) {
    case EventKind::Block: return 4;
    case EventKind::SoundRep: return 3;
    case EventKind::Prolongation: return 2;
    case EventKind::WordRep: return 1;
    }
    return 0;
}

// ---- Evidence ----------------------------------------------------------------

namespace {
template <class Items>
auto find_item(Items& items, std::string_view name) {
    return std::lower_bound(items.begin(), items.end(), name,
                            [](const auto& item, std::string_view n) { return item.first < n; });
}
}  // namespace

void Evidence::set(std::string name, double value) {
    auto it = find_item(items_, name);
    if (it != items_.end() && it->first == name) {
        it->second = value;
    } else {
        items_.insert(it, {std::move(name), value});
    }
}

void Evidence::set(std::string name, std::string value) {
    auto it = find_item(items_, name);
    if (it != items_.end() && it->first == name) {
        it->second = std::move(value);
    } else {
        items_.insert(it, {std::move(name), std::move(value)});
    }
}

bool Evidence::has(std::string_view name) const {
    auto it = find_item(items_, name);
    return it != items_.end() && it->first == name;
}

double Evidence::number(std::string_view name) const {
    auto it = find_item(items_, name);
    if (it == items_.end() || it->first != name || !std::holds_alternative<double>(it->second)) {
        throw std::out_of_range("evidence has no numeric field '" + std::string(name) + "'");
    }
    return std::get<double>(it->second);
}

std::string Evidence::text(std::string_view name) const {
    auto it = find_item(items_, name);
    if (it == items_.end() || it->first != name || !std::holds_alternative<std::string>(it->second)) {
        throw std::out_of_range("evidence has no text field '" + std::string(name) + "'");
    }
    return std::get<std::string>(it->second);
}

std::size_t EventReport::count(EventKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [kind](const DysfluencyEvent& e) { return e.kind == kind; }));
}

// ---- JSON --------------------------------------------------------------------

nlohmann::json evidence_to_json(const Evidence& ev) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [name, value] : ev.items()) {
        std::visit([&, &name = name](const auto& v) { j[name] = v; }, value);
    }
    return j;
}

Evidence evidence_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("evidence must be a JSON object");
    Evidence ev;
    for (const auto& [key, value] : j.items()) {
        if (value.is_number()) {
            ev.set(key, value.get<double>());
        } else if (value.is_string()) {
            ev.set(key, value.get<std::string>());
        } else {
            throw FormatError("evidence field '" + key + "' must be a number or string");
        }
    }
    return ev;
}

nlohmann::json event_to_json(const DysfluencyEvent& ev) {
    return {{"id", ev.id},
            {"kind", kind_name(ev.kind)},
            {"start_s", ev.start_s},
            {"end_s", ev.end_s},
            {"confidence", ev.confidence},
            {"evidence", evidence_to_json(ev.evidence)}};
}

DysfluencyEvent event_from_json(const nlohmann::json& j) {
    try {
        DysfluencyEvent ev;
        ev.id = j.value("id", std::string{});
        ev.kind = parse_kind(j.at("kind").get<std::string>());
        ev.start_s = j.at("start_s").get<double>();
        ev.end_s = j.at("end_s").get<double>();
        ev.confidence = j.at("confidence").get<double>();
        ev.evidence = evidence_from_json(j.at("evidence"));
        return ev;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed event: ") + e.what());
    }
}

nlohmann::json report_to_json(const EventReport& report) {
    nlohmann::json counts = nlohmann::json::object();
    for (EventKind k : kAllKinds) counts[std::string(kind_name(k))] = report.count(k);
    nlohmann::json events = nlohmann::json::array();
    for (const auto& ev : report.events) events.push_back(event_to_json(ev));
    return {{"recording_id", report.recording_id},
            {"version", report.version},
            {"duration_s", report.duration_s},
            {"silent_input", report.silent_input},
            {"speaking_rate", report.speaking_rate ? nlohmann::json(*report.speaking_rate) : nlohmann::json()},
            {"counts", counts},
            {"config", config_to_json(report.config)},
            {"events", events}};
}

EventReport report_from_json(const nlohmann::json& j) {
    try {
        EventReport r;
        r.recording_id = j.at("recording_id").get<std::string>();
        r.version = j.value("version", std::string{});
        r.duration_s = j.value("duration_s", 0.0);
        r.silent_input = j.value("silent_input", false);
        if (j.contains("speaking_rate") && !j.at("speaking_rate").is_null()) {
            r.speaking_rate = j.at("speaking_rate").get<double>();
        }
        r.config = config_from_json(j.at("config"));
        for (const auto& e : j.at("events")) r.events.push_back(event_from_json(e));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
}

std::string report_to_text(const EventReport& report) {
    std::ostringstream out;
    out << "recording      " << report.recording_id << '\n';
    out << "duration       " << fixed(report.duration_s, 2) << " s\n";
    out << "speaking rate  " << (report.speaking_rate ? fixed(*report.speaking_rate, 2) + " syll/s" : "n/a") << '\n';
    out << "events         " << report.events.size() << '\n';
    if (report.events.empty()) return out.str();
    out << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%-8s %-13s %9s %9s %6s  %s\n", "id", "kind", "start_s", "end_s", "conf",
                  "evidence");
    out << line;
    for (const auto& ev : report.events) {
        std::string evidence;
        for (const auto& [name, value] : ev.evidence.items()) {
            if (!evidence.empty()) evidence += ' ';
            evidence += name + '=';
            if (const auto* d = std::get_if<double>(&value)) {
                evidence += fixed(*d, 3);
            } else {
                evidence += std::get<std::string>(value);
            }
        }
        std::snprintf(line, sizeof line, "%-8s %-13s %9.3f %9.3f %6.2f  ", ev.id.c_str(),
                      std::string(kind_name(ev.kind)).c_str(), ev.start_s, ev.end_s, ev.confidence);
        out << line << evidence << '\n';
    }
    return out.str();
}

std::string report_to_csv(const EventReport& report) {
    std::ostringstream out;
    out << "id,kind,start_s,end_s,confidence,evidence\n";
    for (const auto& ev : report.events) {
        std::string evidence = evidence_to_json(ev.evidence).dump();
        std::string quoted;
        for (char c : evidence) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
        out << ev.id << ',' << kind_name(ev.kind) << ',' << fixed(ev.start_s, 4) << ',' << fixed(ev.end_s, 4) << ','
            << fixed(ev.confidence, 4) << ",\"" << quoted << "\"\n";
    }
    return out.str();
}

AnnotationSet annotations_from_report(const EventReport& report) {
    AnnotationSet set;
    set.recording_id = report.recording_id;
    for (const auto& ev : report.events) set.events.push_back({ev.kind, ev.start_s, ev.end_s});
    return set;
}

}  // namespace dysfluency
