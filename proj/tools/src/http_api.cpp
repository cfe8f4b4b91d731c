#include "dysfluency_tools/http_api.hpp"

#include "dysfluency/errors.hpp"

#include <sstream>

namespace dysfluency::service {

namespace {

constexpr const char* kJson = "application/json";
constexpr std::size_t kDefaultWaveformPoints = 1000;

void send(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
}

nlohmann::json parse_body(const httplib::Request& req) {
    try {
        return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("request body is not valid JSON: ") + e.what());
    }
}

std::string author_of(const httplib::Request& req, const nlohmann::json* body = nullptr) {
    if (body && body->contains("author") && (*body)["author"].is_string()) return (*body)["author"];
    const std::string header = req.get_header_value("X-Author");
    return header.empty() ? "anonymous" : header;
}

WordAlignment alignment_from_upload(const std::string& text, const std::string& filename) {
    std::istringstream in(text);
    const bool textgrid = filename.ends_with(".TextGrid") || filename.ends_with(".textgrid") ||
                          text.find("ooTextFile") != std::string::npos;
    return textgrid ? parse_textgrid(in, filename) : parse_alignment_csv(in, filename);
}

nlohmann::json waveform_json(const WaveformPeaks& w) {
    nlohmann::json mins = nlohmann::json::array(), maxs = nlohmann::json::array();
    for (const auto& [lo, hi] : w.peaks) {
        mins.push_back(lo);
        maxs.push_back(hi);
    }
    return {{"sample_rate", w.sample_rate},
            {"duration_s", w.duration_s},
            {"points", w.peaks.size()},
            {"min", mins},
            {"max", maxs}};
}

// Runs `fn` and turns library errors into JSON error responses.
template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const std::exception& e) {
            const auto [status, body] = error_response(e);
            send(res, status, body);
        }
    };
}

}  // namespace

std::pair<int, nlohmann::json> error_response(const std::exception& e) {
    int status = 500;
    std::string kind = "internal";
    if (dynamic_cast<const NotFoundError*>(&e)) {
        status = 404;
        kind = "not_found";
    } else if (dynamic_cast<const ConflictError*>(&e)) {
        status = 409;
        kind = "conflict";
    } else if (dynamic_cast<const PayloadTooLargeError*>(&e)) {
        status = 413;
        kind = "payload_too_large";
    } else if (dynamic_cast<const ConfigError*>(&e)) {
        status = 422;
        kind = "invalid_config";
    } else if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e)) {
        status = 400;
        kind = "bad_request";
    } else if (dynamic_cast<const InsufficientSpeechError*>(&e)) {
        status = 422;
        kind = "insufficient_speech";
    }
    return {status, {{"error", kind}, {"message", e.what()}}};
}

void install_routes(httplib::Server& server, SessionStore& store) {
    server.set_payload_max_length(store.options().max_upload_bytes + (1u << 20));

    server.Post("/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        std::string wav;
        std::optional<WordAlignment> alignment;
        std::optional<RuleConfig> config;
        if (req.is_multipart_form_data()) {
            if (!req.has_file("audio")) throw FormatError("multipart upload needs an 'audio' part");
            wav = req.get_file_value("audio").content;
            if (req.has_file("alignment")) {
                const auto part = req.get_file_value("alignment");
                alignment = alignment_from_upload(part.content, part.filename.empty() ? "alignment" : part.filename);
            }
            if (req.has_file("config")) {
                try {
                    config = config_from_json(nlohmann::json::parse(req.get_file_value("config").content));
                } catch (const nlohmann::json::parse_error& e) {
                    throw ConfigError(std::string("config part is not valid JSON: ") + e.what());
                }
            }
        } else {
            wav = req.body;
        }
        const std::string id =
            store.create({reinterpret_cast<const std::uint8_t*>(wav.data()), wav.size()}, alignment, config);
        const SessionView view = store.get(id);
        res.set_header("Location", "/sessions/" + id);
        send(res, 201, {{"id", id}, {"session", session_to_json(view)}, {"report", report_to_json(view.report)}});
    }));

    server.Get("/sessions", guarded([&store](const httplib::Request&, httplib::Response& res) {
        send(res, 200, {{"sessions", store.list()}});
    }));

    server.Get(R"(/sessions/([0-9a-f]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
        send(res, 200, session_to_json(store.get(req.matches[1])));
    }));

    server.Post(R"(/sessions/([0-9a-f]+)/detect)",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    send(res, 200, report_to_json(store.detect(req.matches[1])));
                }));

    server.Patch(R"(/sessions/([0-9a-f]+)/thresholds)",
                 guarded([&store](const httplib::Request& req, httplib::Response& res) {
                     const auto body = parse_body(req);
                     const auto result = store.patch(req.matches[1], body, author_of(req));
                     nlohmann::json entries = nlohmann::json::array();
                     for (const auto& e : result.entries) entries.push_back(audit_to_json(e));
                     send(res, 200, {{"report", report_to_json(result.report)}, {"audit_entries", entries}});
                 }));

    server.Get(R"(/sessions/([0-9a-f]+)/events)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   send(res, 200, report_to_json(store.report(req.matches[1])));
               }));

    server.Get(R"(/sessions/([0-9a-f]+)/waveform)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   std::size_t points = kDefaultWaveformPoints;
                   if (req.has_param("points")) {
                       const std::string text = req.get_param_value("points");
                       try {
                           std::size_t used = 0;
                           const long long v = std::stoll(text, &used);
                           if (used != text.size() || v < 2) throw std::invalid_argument("range");
                           points = static_cast<std::size_t>(v);
                       } catch (const std::exception&) {
                           throw FormatError("points must be an integer >= 2, got '" + text + "'");
                       }
                   }
                   send(res, 200, waveform_json(store.waveform(req.matches[1], points)));
               }));

    server.Post(R"(/sessions/([0-9a-f]+)/feedback)",
                guarded([&store](const httplib::Request& req, httplib::Response& res) {
                    const auto body = parse_body(req);
                    FeedbackEntry entry;
                    try {
                        entry = feedback_from_json(body);
                    } catch (const nlohmann::json::exception& e) {
                        throw FormatError(std::string("malformed feedback: ") + e.what());
                    }
                    entry.author = author_of(req, &body);
                    send(res, 201, feedback_to_json(store.add_feedback(req.matches[1], std::move(entry))));
                }));

    server.Get(R"(/sessions/([0-9a-f]+)/feedback)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   nlohmann::json entries = nlohmann::json::array();
                   for (const auto& e : store.feedback(req.matches[1])) entries.push_back(feedback_to_json(e));
                   send(res, 200, {{"entries", entries}});
               }));

    server.Get(R"(/sessions/([0-9a-f]+)/audit)",
               guarded([&store](const httplib::Request& req, httplib::Response& res) {
                   nlohmann::json entries = nlohmann::json::array();
                   for (const auto& e : store.audit(req.matches[1])) entries.push_back(audit_to_json(e));
                   send(res, 200, {{"entries", entries}});
               }));

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        send(res, 200, {{"status", "ok"}});
    });
}

}  // namespace dysfluency::service
