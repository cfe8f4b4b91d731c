#include "dysfluency/errors.hpp"
#include "dysfluency/events.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace dysfluency {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool to_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc{} && ptr == t.data() + t.size();
}

}  // namespace

void write_annotations_csv(std::ostream& out, const std::vector<AnnotationSet>& sets) {
    out << "recording_id,kind,start_s,end_s\n";
    char buf[96];
    for (const auto& set : sets) {
        for (const auto& a : set.events) {
            std::snprintf(buf, sizeof buf, ",%.4f,%.4f\n", a.start_s, a.end_s);
            out << set.recording_id << ',' << kind_name(a.kind) << buf;
        }
    }
}

std::vector<AnnotationSet> parse_annotations_csv(std::istream& in, std::string_view origin) {
    std::vector<AnnotationSet> sets;
    std::map<std::string, std::size_t> index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto fail = [&](const std::string& why) {
            return FormatError(std::string(origin) + ":" + std::to_string(lineno) + ": " + why);
        };
        std::vector<std::string> cols;
        std::stringstream ss(t);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(trim(col));
        if (cols.size() != 4) throw fail("expected 4 columns (recording_id,kind,start_s,end_s)");
        Annotation a;
        if (!to_double(cols[2], a.start_s) || !to_double(cols[3], a.end_s)) {
            if (lineno == 1 && sets.empty()) continue;  // header
            throw fail("start_s/end_s must be numbers");
        }
        try {
            a.kind = parse_kind(cols[1]);
        } catch (const FormatError& e) {
            throw fail(e.what());
        }
        if (!(a.start_s < a.end_s)) throw fail("start_s must be < end_s");
        auto [it, fresh] = index.try_emplace(cols[0], sets.size());
        if (fresh) sets.push_back({cols[0], {}});
        sets[it->second].events.push_back(a);
    }
    return sets;
}

std::vector<AnnotationSet> load_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open annotation file '" + path.string() + "'");
    return parse_annotations_csv(in, path.string());
}

}  // namespace dysfluency
