#include "dysfluency/synthgen.hpp"

#include "dysfluency/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

namespace dysfluency {

namespace {

constexpr int kRate = kCanonicalSampleRate;
constexpr double kToneRms = 0.1;
constexpr double kNoiseFloorRms = 1e-4;
constexpr double kToneFraction = 0.8;  // of a syllable slot; the rest is a gap
constexpr double kLeadSilenceS = 0.4;
constexpr double kFragmentS = 0.03;
constexpr double kDipDb = -25.0;
constexpr double kAudibleDb = -50.0;
constexpr double kMaxHarmonicHz = 5000.0;

struct Vowel {
    std::array<double, 3> formants;
};

// Rough adult formant targets.
constexpr std::array<Vowel, 5> kVowels = {{
    {{730.0, 1090.0, 2440.0}},
    {{270.0, 2290.0, 3010.0}},
    {{300.0, 870.0, 2240.0}},
    {{530.0, 1840.0, 2480.0}},
    {{570.0, 840.0, 2410.0}},
}};

double formant_gain(const Vowel& v, double hz) {
    constexpr std::array<double, 3> gains = {1.0, 0.5, 0.25};
    constexpr std::array<double, 3> widths = {80.0, 100.0, 150.0};
    double g = 0.02;
    for (std::size_t k = 0; k < 3; ++k) {
        const double x = (hz - v.formants[k]) / widths[k];
        g += gains[k] / std::sqrt(1.0 + x * x);
    }
    return g;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::size_t to_samples(double s) { return static_cast<std::size_t>(std::llround(std::max(0.0, s) * kRate)); }

class Renderer {
public:
    explicit Renderer(std::uint64_t seed) : rng_(mix_seed(seed, 1)) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double gauss() { return normal_(rng_); }

    std::vector<double>& buffer() { return buf_; }

    void ensure(std::size_t n) {
        if (buf_.size() < n) buf_.resize(n, 0.0);
    }

    /// Harmonic tone with a raised-cosine attack/release and a linear F0 glide.
    std::vector<double> tone(std::size_t len, double f0_start, double f0_end, const Vowel& vowel, double attack_s,
                             double release_s) {
        std::vector<double> out(len, 0.0);
        if (len == 0) return out;
        const auto harmonics = static_cast<int>(kMaxHarmonicHz / std::max(f0_start, f0_end));
        std::vector<double> amp(static_cast<std::size_t>(harmonics));
        std::vector<double> phase(static_cast<std::size_t>(harmonics));
        double power = 0.0;
        const double f0_mid = 0.5 * (f0_start + f0_end);
        for (int h = 1; h <= harmonics; ++h) {
            const double a = formant_gain(vowel, h * f0_mid) / std::sqrt(static_cast<double>(h));
            amp[h - 1] = a;
            phase[h - 1] = uniform(0.0, 2.0 * std::numbers::pi);
            power += 0.5 * a * a;
        }
        const double scale = kToneRms / std::sqrt(power);
        double theta = 0.0;
        const auto attack = std::min(len / 2, to_samples(attack_s));
        const auto release = std::min(len / 2, to_samples(release_s));
        for (std::size_t n = 0; n < len; ++n) {
            const double frac = len > 1 ? static_cast<double>(n) / static_cast<double>(len - 1) : 0.0;
            const double f0 = f0_start + (f0_end - f0_start) * frac;
            theta += 2.0 * std::numbers::pi * f0 / kRate;
            double s = 0.0;
            for (int h = 1; h <= harmonics; ++h) s += amp[h - 1] * std::sin(h * theta + phase[h - 1]);
            out[n] = s * scale * ramp(n, len, attack, release);
        }
        return out;
    }

    std::vector<double> white(std::size_t len, double rms) {
        std::vector<double> out(len);
        for (auto& v : out) v = rms * gauss();
        return out;
    }

    /// Stationary noise confined to [lo, hi] Hz, built from random-phase partials.
    std::vector<double> band_noise(std::size_t len, double lo, double hi, double rms) {
        std::vector<double> out(len, 0.0);
        const double step = 25.0;
        const auto count = static_cast<std::size_t>((hi - lo) / step) + 1;
        const double a = rms * std::sqrt(2.0 / static_cast<double>(count));
        for (std::size_t k = 0; k < count; ++k) {
            const double w = 2.0 * std::numbers::pi * (lo + step * static_cast<double>(k)) / kRate;
            const double ph = uniform(0.0, 2.0 * std::numbers::pi);
            for (std::size_t n = 0; n < len; ++n) out[n] += a * std::sin(w * static_cast<double>(n) + ph);
        }
        return out;
    }

    void place(std::size_t at, const std::vector<double>& x) {
        ensure(at + x.size());
        for (std::size_t n = 0; n < x.size(); ++n) buf_[at + n] += x[n];
    }

    static double ramp(std::size_t n, std::size_t len, std::size_t attack, std::size_t release) {
        double g = 1.0;
        if (attack > 0 && n < attack) g *= 0.5 - 0.5 * std::cos(std::numbers::pi * (n + 0.5) / attack);
        if (release > 0 && n + release >= len) {
            const double k = static_cast<double>(len - n) - 0.5;
            g *= 0.5 - 0.5 * std::cos(std::numbers::pi * k / release);
        }
        return g;
    }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::vector<double> buf_;
};

const char* type_name(SegmentType t) {
    switch (t) {
    case SegmentType::Syllable: return "Syllable";
    case SegmentType::Prolongation: return "Prolongation";
    case SegmentType::RepBurst: return "RepBurst";
    case SegmentType::SilentBlock: return "SilentBlock";
    case SegmentType::AudibleBlock: return "AudibleBlock";
    case SegmentType::Pause: return "Pause";
    case SegmentType::WordRep: return "WordRep";
    }
    return "?";
}

SegmentType parse_type(const std::string& name) {
    for (SegmentType t : {SegmentType::Syllable, SegmentType::Prolongation, SegmentType::RepBurst,
                          SegmentType::SilentBlock, SegmentType::AudibleBlock, SegmentType::Pause,
                          SegmentType::WordRep}) {
        if (name == type_name(t)) return t;
    }
    throw ConfigError("unknown segment type '" + name + "'");
}

}  // namespace

void SynthSpec::validate() const {
    if (!(base_rate > 0.0) || !std::isfinite(base_rate)) throw ConfigError("synth spec: base_rate must be > 0");
    if (!(time_scale > 0.0) || !std::isfinite(time_scale)) throw ConfigError("synth spec: time_scale must be > 0");
    if (plan.empty()) throw ConfigError("synth spec: plan is empty");
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& s = plan[i];
        const std::string where = "synth spec: segment " + std::to_string(i) + " (" + type_name(s.type) + ")";
        if (s.type == SegmentType::RepBurst) {
            if (s.cycles < 1) throw ConfigError(where + ": cycles must be >= 1");
            if (!(s.period_s > 0.0)) throw ConfigError(where + ": period_s must be > 0");
        } else if (s.type == SegmentType::Syllable) {
            if (s.dur_s < 0.0 || !std::isfinite(s.dur_s)) throw ConfigError(where + ": dur must be > 0");
        } else if (!(s.dur_s > 0.0) || !std::isfinite(s.dur_s)) {
            throw ConfigError(where + ": dur must be > 0");
        }
        if (s.type == SegmentType::SilentBlock && s.dur_s <= kFragmentS) {
            throw ConfigError(where + ": dur must exceed the " + std::to_string(kFragmentS) + " s onset fragment");
        }
    }
}

SynthOutput generate(const SynthSpec& spec) {
    spec.validate();
    Renderer r(spec.seed);
    const double ts = spec.time_scale;
    const double slot_nominal = 1.0 / spec.base_rate;

    SynthOutput out;
    out.annotations.recording_id = spec.id;
    const double f0_base = r.uniform(120.0, 220.0);
    std::size_t vowel = static_cast<std::size_t>(r.uniform_int(0, static_cast<int>(kVowels.size()) - 1));
    const auto next_vowel = [&] {
        vowel = (vowel + 1 + static_cast<std::size_t>(r.uniform_int(0, static_cast<int>(kVowels.size()) - 2))) %
                kVowels.size();
        return kVowels[vowel];
    };

    double t = kLeadSilenceS * ts;
    double first_onset = -1.0, last_offset = 0.0;
    int token = 0;
    const auto mark_speech = [&](double a, double b) {
        if (first_onset < 0.0) first_onset = a;
        last_offset = std::max(last_offset, b);
    };
    const auto syllable_tone = [&](double tone_s) {
        const double f0 = f0_base * r.uniform(0.92, 1.08);
        const double f1 = f0 * r.uniform(0.94, 0.99);
        return r.tone(to_samples(tone_s), f0, f1, next_vowel(), 0.3 * tone_s, 0.3 * tone_s);
    };

    for (const auto& seg : spec.plan) {
        switch (seg.type) {
        case SegmentType::Syllable: {
            const double slot = (seg.dur_s > 0.0 ? seg.dur_s : slot_nominal * r.uniform(0.95, 1.05)) * ts;
            const double tone_s = kToneFraction * slot;
            r.place(to_samples(t), syllable_tone(tone_s));
            out.alignment.push_back({"syl" + std::to_string(++token), t, t + tone_s});
            mark_speech(t, t + tone_s);
            ++out.nuclei;
            t += slot;
            break;
        }
        case SegmentType::Prolongation: {
            const double dur = seg.dur_s * ts;
            const double f0 = f0_base * r.uniform(0.95, 1.05);
            r.place(to_samples(t), r.tone(to_samples(dur), f0, f0, next_vowel(), 0.012, 0.012));
            out.annotations.events.push_back({EventKind::Prolongation, t, t + dur});
            out.alignment.push_back({"syl" + std::to_string(++token), t, t + dur});
            mark_speech(t, t + dur);
            ++out.nuclei;
            t += dur + (1.0 - kToneFraction) * slot_nominal * ts;
            break;
        }
        case SegmentType::RepBurst: {
            const double period = seg.period_s * ts;
            const std::size_t period_n = to_samples(period);
            const std::size_t tone_n = to_samples(0.6 * period);
            const double f0 = f0_base * r.uniform(0.95, 1.05);
            std::vector<double> cycle = r.tone(tone_n, f0, f0, next_vowel(), 0.005, 0.005);
            cycle.resize(period_n, 0.0);
            const auto dip = r.white(period_n - tone_n, kToneRms * std::pow(10.0, kDipDb / 20.0));
            for (std::size_t n = 0; n < dip.size(); ++n) {
                cycle[tone_n + n] += dip[n] * Renderer::ramp(n, dip.size(), 40, 40);
            }
            const std::size_t at = to_samples(t);
            for (int c = 0; c < seg.cycles; ++c) r.place(at + static_cast<std::size_t>(c) * period_n, cycle);
            const double dur = static_cast<double>(seg.cycles) * static_cast<double>(period_n) / kRate;
            out.annotations.events.push_back({EventKind::SoundRep, t, t + dur});
            out.alignment.push_back({"rep" + std::to_string(++token), t, t + dur});
            mark_speech(t, t + dur);
            ++out.nuclei;
            t += dur;
            break;
        }
        case SegmentType::WordRep: {
            const double tone_s = seg.dur_s * ts;
            const double gap = (1.0 - kToneFraction) * slot_nominal * ts;
            const auto word = syllable_tone(tone_s);
            const std::string name = "word" + std::to_string(++token);
            r.place(to_samples(t), word);
            r.place(to_samples(t + tone_s + gap), word);
            const double end = t + 2.0 * tone_s + gap;
            out.annotations.events.push_back({EventKind::WordRep, t, end});
            out.alignment.push_back({name, t, t + tone_s});
            out.alignment.push_back({name, t + tone_s + gap, end});
            mark_speech(t, end);
            out.nuclei += 2;
            t = end + gap;
            break;
        }
        case SegmentType::SilentBlock: {
            const double dur = seg.dur_s * ts;
            const std::size_t frag_n = to_samples(kFragmentS);
            auto frag = r.white(frag_n, kToneRms);
            for (std::size_t n = 0; n < frag_n; ++n) frag[n] *= Renderer::ramp(n, frag_n, 16, 80);
            r.place(to_samples(t), frag);
            out.annotations.events.push_back({EventKind::Block, t, t + dur});
            mark_speech(t, t + dur);
            t += dur;
            break;
        }
        case SegmentType::AudibleBlock: {
            const double dur = seg.dur_s * ts;
            const std::size_t len = to_samples(dur);
            auto noise = r.band_noise(len, 3000.0, 7000.0, kToneRms * std::pow(10.0, kAudibleDb / 20.0));
            for (std::size_t n = 0; n < len; ++n) noise[n] *= Renderer::ramp(n, len, 160, 160);
            r.place(to_samples(t), noise);
            out.annotations.events.push_back({EventKind::Block, t, t + dur});
            mark_speech(t, t + dur);
            t += dur;
            break;
        }
        case SegmentType::Pause:
            t += seg.dur_s * ts;
            break;
        }
    }
    t += kLeadSilenceS * ts;

    const std::size_t total = std::max(to_samples(t), kWindowSamples);
    r.ensure(total);
    auto& buf = r.buffer();
    buf.resize(total);
    for (auto& v : buf) v = std::clamp(v + kNoiseFloorRms * r.gauss(), -1.0, 1.0);

    out.audio.sample_rate = kRate;
    out.audio.samples = std::move(buf);
    out.speech_s = first_onset < 0.0 ? 0.0 : last_offset - first_onset;
    return out;
}

// ---- spec serialization ------------------------------------------------------

nlohmann::json spec_to_json(const SynthSpec& spec) {
    nlohmann::json plan = nlohmann::json::array();
    for (const auto& s : spec.plan) {
        nlohmann::json j = {{"type", type_name(s.type)}};
        if (s.type == SegmentType::RepBurst) {
            j["cycles"] = s.cycles;
            j["period_s"] = s.period_s;
        } else if (s.dur_s > 0.0) {
            j["dur"] = s.dur_s;
        }
        plan.push_back(std::move(j));
    }
    return {{"id", spec.id},
            {"seed", spec.seed},
            {"base_rate", spec.base_rate},
            {"time_scale", spec.time_scale},
            {"plan", plan}};
}

SynthSpec spec_from_json(const nlohmann::json& j) {
    try {
        if (!j.is_object()) throw ConfigError("synth spec must be a JSON object");
        SynthSpec spec;
        spec.id = j.value("id", spec.id);
        spec.seed = j.value("seed", spec.seed);
        spec.base_rate = j.value("base_rate", spec.base_rate);
        spec.time_scale = j.value("time_scale", spec.time_scale);
        for (const auto& s : j.at("plan")) {
            Segment seg;
            seg.type = parse_type(s.at("type").get<std::string>());
            seg.dur_s = s.value("dur", 0.0);
            seg.cycles = s.value("cycles", 0);
            seg.period_s = s.value("period_s", 0.0);
            const int count = s.value("count", 1);
            if (count < 1) throw ConfigError("synth spec: count must be >= 1");
            for (int c = 0; c < count; ++c) spec.plan.push_back(seg);
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synth spec: ") + e.what());
    }
}

std::vector<SynthSpec> load_specs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synth spec '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("synth spec '" + path.string() + "' is not valid JSON: " + e.what());
    }
    std::vector<SynthSpec> specs;
    if (j.is_array()) {
        for (const auto& item : j) specs.push_back(spec_from_json(item));
    } else {
        specs.push_back(spec_from_json(j));
    }
    return specs;
}

// ---- presets -----------------------------------------------------------------

namespace {

void add_syllables(std::vector<Segment>& plan, int n) {
    for (int i = 0; i < n; ++i) plan.push_back({SegmentType::Syllable, 0.0, 0, 0.0});
}

Segment planted(std::mt19937_64& rng, int kind, double rate) {
    const auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    switch (kind) {
    case 0: return {SegmentType::Prolongation, u(1.4, 1.6) / rate, 0, 0.0};
    case 1: return {SegmentType::RepBurst, 0.0, std::uniform_int_distribution<int>(3, 5)(rng), u(0.12, 0.14)};
    case 2: return {SegmentType::WordRep, kToneFraction / rate * u(0.95, 1.05), 0, 0.0};
    case 3: return {SegmentType::SilentBlock, u(0.5, 0.8), 0, 0.0};
    default: return {SegmentType::AudibleBlock, u(0.3, 0.5), 0, 0.0};
    }
}

std::string numbered(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%03zu", prefix, i);
    return buf;
}

}  // namespace

std::vector<SynthSpec> standard_corpus(std::uint64_t seed, std::size_t count) {
    std::vector<SynthSpec> specs;
    std::size_t planted_total = 0;
    for (std::size_t u = 0; u < count; ++u) {
        std::mt19937_64 rng(mix_seed(seed, 1000 + u));
        const auto ui = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
        SynthSpec s;
        s.id = numbered("std", u);
        s.seed = mix_seed(seed, u);
        s.base_rate = std::uniform_real_distribution<double>(3.0, 3.6)(rng);
        const int events = 2 + static_cast<int>(u % 2);
        add_syllables(s.plan, ui(3, 5));
        for (int e = 0; e < events; ++e) {
            // Kinds rotate so the corpus stays balanced; blocks alternate variants.
            const std::size_t k = planted_total++;
            const int kind = static_cast<int>(k % 4);
            const int variant = kind == 3 && (k / 4) % 2 == 1 ? 4 : kind;
            s.plan.push_back(planted(rng, variant, s.base_rate));
            add_syllables(s.plan, ui(3, 6));
            if (ui(0, 3) == 0) {
                s.plan.push_back({SegmentType::Pause, std::uniform_real_distribution<double>(0.4, 0.7)(rng), 0, 0.0});
                add_syllables(s.plan, ui(2, 4));
            }
        }
        specs.push_back(std::move(s));
    }
    return specs;
}

std::vector<SynthSpec> rate_sweep_corpus(std::uint64_t seed, std::size_t count) {
    std::vector<SynthSpec> specs;
    for (std::size_t u = 0; u < count; ++u) {
        std::mt19937_64 rng(mix_seed(seed, 5000 + u));
        const auto ui = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
        SynthSpec s;
        s.id = numbered("sweep", u);
        s.seed = mix_seed(seed, 7000 + u);
        s.base_rate = std::uniform_real_distribution<double>(3.0, 3.6)(rng);
        add_syllables(s.plan, ui(4, 6));
        for (int e = 0; e < 3; ++e) {
            const int kind = e == 1 ? static_cast<int>(1 + u % 4) : 0;
            s.plan.push_back(planted(rng, kind, s.base_rate));
            add_syllables(s.plan, ui(4, 6));
        }
        specs.push_back(std::move(s));
    }
    return specs;
}

SynthSpec trace_spec(std::uint64_t seed) {
    SynthSpec s;
    s.id = "trace";
    s.seed = seed;
    s.base_rate = 3.2;
    add_syllables(s.plan, 20);
    s.plan.push_back({SegmentType::Prolongation, 0.42, 0, 0.0});
    add_syllables(s.plan, 20);
    return s;
}

SynthSpec fluent_spec(std::uint64_t seed, double rate, std::size_t syllables) {
    SynthSpec s;
    s.id = "fluent";
    s.seed = seed;
    s.base_rate = rate;
    add_syllables(s.plan, static_cast<int>(syllables));
    return s;
}

std::vector<SynthSpec> preset(const std::string& name, std::uint64_t seed) {
    if (name == "standard-200") return standard_corpus(seed, 200);
    if (name == "rate-sweep") return rate_sweep_corpus(seed);
    if (name == "trace") return {trace_spec(seed)};
    throw ConfigError("unknown synth preset '" + name + "' (known: standard-200, rate-sweep, trace)");
}

std::vector<SynthSpec> with_time_scale(std::vector<SynthSpec> specs, double scale) {
    for (auto& s : specs) s.time_scale = scale;
    return specs;
}

void write_corpus(const std::filesystem::path& dir, const std::vector<SynthSpec>& specs) {
    std::filesystem::create_directories(dir);
    for (const auto& spec : specs) {
        const SynthOutput o = generate(spec);
        write_wav(dir / (spec.id + ".wav"), o.audio);
        std::ofstream ann(dir / (spec.id + ".csv"));
        if (!ann) throw IoError("cannot write annotations in '" + dir.string() + "'");
        write_annotations_csv(ann, {o.annotations});
        std::ofstream align(dir / (spec.id + ".align.csv"));
        if (!align) throw IoError("cannot write alignment in '" + dir.string() + "'");
        write_alignment_csv(align, o.alignment);
    }
}

}  // namespace dysfluency
