#include "dysfluency/detectors.hpp"
#include "dysfluency/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace dysfluency {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

bool parse_double(std::string_view text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    return ec == std::errc{} && ptr == t.data() + t.size();
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cols;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cols.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cols.push_back(cur);
    return cols;
}

// Value after '=' on a TextGrid line, unquoted.
std::string textgrid_value(const std::string& line) {
    const auto eq = line.find('=');
    std::string v = trim(std::string_view(line).substr(eq + 1));
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        v = v.substr(1, v.size() - 2);
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            out += v[i];
            if (v[i] == '"' && i + 1 < v.size() && v[i + 1] == '"') ++i;
        }
        return out;
    }
    return v;
}

std::string key_of(const std::string& line) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) return {};
    return trim(std::string_view(line).substr(0, eq));
}

}  // namespace

std::string normalize_token(std::string_view word) {
    std::string out;
    for (unsigned char c : word) {
        if (std::ispunct(c) || std::isspace(c)) continue;
        out += static_cast<char>(std::tolower(c));
    }
    return out;
}

void validate_alignment(const WordAlignment& align) {
    for (std::size_t i = 0; i < align.size(); ++i) {
        const auto& t = align[i];
        if (!(t.start_s < t.end_s)) {
            throw FormatError("malformed alignment: token " + std::to_string(i) + " ('" + t.word +
                              "') has start >= end");
        }
        if (i > 0 && t.start_s < align[i - 1].end_s - 1e-9) {
            throw FormatError("malformed alignment: token " + std::to_string(i) + " ('" + t.word +
                              "') overlaps or precedes the previous token");
        }
    }
}

WordAlignment parse_alignment_csv(std::istream& in, std::string_view origin) {
    WordAlignment out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const auto cols = split_csv(line);
        const auto fail = [&](const std::string& why) {
            return FormatError(std::string(origin) + ":" + std::to_string(lineno) + ": " + why);
        };
        if (cols.size() != 3) throw fail("expected 3 columns (word,start_s,end_s), got " + std::to_string(cols.size()));
        WordToken t;
        t.word = trim(cols[0]);
        const bool ok = parse_double(cols[1], t.start_s) && parse_double(cols[2], t.end_s);
        if (!ok) {
            if (out.empty() && lineno == 1) continue;  // header
            throw fail("start_s/end_s must be numbers");
        }
        out.push_back(std::move(t));
    }
    try {
        validate_alignment(out);
    } catch (const FormatError& e) {
        throw FormatError(std::string(origin) + ": " + e.what());
    }
    return out;
}

WordAlignment parse_textgrid(std::istream& in, std::string_view origin) {
    struct Tier {
        std::string name;
        bool interval = false;
        WordAlignment tokens;
    };
    std::vector<Tier> tiers;
    std::string line;
    std::size_t lineno = 0;
    bool in_interval = false;
    WordToken pending;
    int have = 0;
    const auto fail = [&](const std::string& why) {
        return FormatError(std::string(origin) + ":" + std::to_string(lineno) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.rfind("item [", 0) == 0 && t.find("]:") != std::string::npos) {
            tiers.emplace_back();
            in_interval = false;
            continue;
        }
        if (tiers.empty()) continue;
        const std::string key = key_of(t);
        if (key == "class") {
            tiers.back().interval = textgrid_value(t) == "IntervalTier";
        } else if (key == "name") {
            tiers.back().name = textgrid_value(t);
        } else if (t.rfind("intervals [", 0) == 0) {
            in_interval = true;
            have = 0;
            pending = {};
        } else if (in_interval && (key == "xmin" || key == "xmax")) {
            double v = 0.0;
            if (!parse_double(textgrid_value(t), v)) throw fail("bad " + key + " value");
            (key == "xmin" ? pending.start_s : pending.end_s) = v;
            ++have;
        } else if (in_interval && key == "text") {
            pending.word = textgrid_value(t);
            if (have != 2) throw fail("interval text before xmin/xmax");
            if (!trim(pending.word).empty()) tiers.back().tokens.push_back(pending);
            in_interval = false;
        }
    }
    const Tier* chosen = nullptr;
    for (const auto& tier : tiers) {
        if (!tier.interval) continue;
        if (!chosen) chosen = &tier;
        if (normalize_token(tier.name) == "words") {
            chosen = &tier;
            break;
        }
    }
    if (!chosen) throw FormatError(std::string(origin) + ": no interval tier found");
    try {
        validate_alignment(chosen->tokens);
    } catch (const FormatError& e) {
        throw FormatError(std::string(origin) + ": " + e.what());
    }
    return chosen->tokens;
}

WordAlignment load_alignment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open alignment file '" + path.string() + "'");
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".textgrid") return parse_textgrid(in, path.string());
    return parse_alignment_csv(in, path.string());
}

void write_alignment_csv(std::ostream& out, const WordAlignment& align) {
    out << "word,start_s,end_s\n";
    char buf[64];
    for (const auto& t : align) {
        std::snprintf(buf, sizeof buf, ",%.4f,%.4f\n", t.start_s, t.end_s);
        out << t.word << buf;
    }
}

}  // namespace dysfluency
