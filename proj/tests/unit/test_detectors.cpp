#include "dysfluency/detectors.hpp"
#include "dysfluency/dtw.hpp"
#include "dysfluency/errors.hpp"
#include "dysfluency/pipeline.hpp"
#include "dysfluency/synthgen.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace dysfluency;
using namespace testing;

namespace {

SynthSpec around(std::vector<Segment> middle, double rate = 3.2, std::uint64_t seed = 11, double scale = 1.0) {
    SynthSpec s;
    s.id = "case";
    s.seed = seed;
    s.base_rate = rate;
    s.time_scale = scale;
    for (int i = 0; i < 6; ++i) s.plan.push_back({SegmentType::Syllable});
    for (auto& m : middle) s.plan.push_back(m);
    for (int i = 0; i < 6; ++i) s.plan.push_back({SegmentType::Syllable});
    return s;
}

RuleConfig at_rate(double rate) {
    RuleConfig cfg;
    cfg.calibrated_speaking_rate = rate;
    return cfg;
}

std::vector<DysfluencyEvent> of_kind(const std::vector<DysfluencyEvent>& all, EventKind k) {
    std::vector<DysfluencyEvent> out;
    std::copy_if(all.begin(), all.end(), std::back_inserter(out), [&](const auto& e) { return e.kind == k; });
    return out;
}

FeatureSet tracks(std::size_t n) {
    FeatureSet fs;
    fs.energy = FrameSeries::scalar(n);
    fs.flux = FrameSeries::scalar(n);
    fs.centroid = FrameSeries::scalar(n);
    return fs;
}

void require_replays(const std::vector<DysfluencyEvent>& events, const RuleConfig& cfg) {
    for (const auto& e : events) {
        INFO(kind_name(e.kind) << " at " << e.start_s);
        REQUIRE(replay_decision(e, cfg));
        REQUIRE(e.start_s < e.end_s);
        REQUIRE(e.confidence >= 0.0);
        REQUIRE(e.confidence <= 1.0);
    }
}

}  // namespace

TEST_CASE("prolongation: 420 ms at 3.2 syll/s") {
    const RuleConfig cfg = at_rate(3.2);
    const SynthOutput out = generate(around({{SegmentType::Prolongation, 0.42}}));
    const Analysis a = analyze(out.audio, cfg);
    const auto events = detect_prolongations(*a.features, cfg);
    REQUIRE(events.size() == 1);
    const auto& ev = events.front();
    CHECK(ev.evidence.number("normalized_duration") == doctest::Approx(1.34).epsilon(0.05 / 1.34));
    CHECK(ev.evidence.number("speaking_rate") == 3.2);
    CHECK(ev.evidence.number("t_min_s") == doctest::Approx(0.375));
    CHECK(ev.evidence.number("mean_sim") > cfg.theta_sim);
    CHECK(ev.evidence.number("rate_normalized") == 1.0);
    for (const char* key : {"mean_sim", "duration_s", "speaking_rate", "normalized_duration", "min_sim", "max_df0",
                            "min_hnr"}) {
        CHECK(ev.evidence.has(key));
    }
    const Annotation& truth = out.annotations.events.front();
    CHECK(interval_iou(ev.start_s, ev.end_s, truth.start_s, truth.end_s) >= 0.8);
    require_replays(events, cfg);
}

TEST_CASE("prolongation: 300 ms at 3.2 syll/s is too short") {
    const RuleConfig cfg = at_rate(3.2);
    const Analysis a = analyze(generate(around({{SegmentType::Prolongation, 0.30}})).audio, cfg);
    CHECK(detect_prolongations(*a.features, cfg).empty());
    CHECK(prolongation_gate(3.2, cfg).t_min_s == doctest::Approx(0.375));
}

TEST_CASE("prolongation: time-stretched copy at half the rate") {
    const RuleConfig cfg = at_rate(1.6);
    const SynthOutput out = generate(around({{SegmentType::Prolongation, 0.42}}, 3.2, 11, 2.0));
    const Analysis a = analyze(out.audio, cfg);
    const auto events = detect_prolongations(*a.features, cfg);
    REQUIRE(events.size() == 1);
    CHECK(events[0].evidence.number("duration_s") > 0.75);
    CHECK(events[0].evidence.number("t_min_s") == doctest::Approx(0.75));
}

TEST_CASE("prolongation: noise never looks stationary") {
    const RuleConfig cfg = at_rate(3.2);
    const AudioBuffer noisy = concat({silence(0.3), white_noise(2.0, 0.3, 77), silence(0.3)});
    const Analysis a = analyze(noisy, cfg);
    CHECK(detect_prolongations(*a.features, cfg).empty());
}

TEST_CASE("prolongation: fixed threshold when normalization is off") {
    RuleConfig cfg = at_rate(3.2);
    cfg.rate_normalization_enabled = false;
    const DurationGate g = prolongation_gate(3.2, cfg);
    CHECK(g.t_min_s == cfg.fixed_t_min_s);
    CHECK_FALSE(g.rate_normalized);
    const Analysis a = analyze(generate(around({{SegmentType::Prolongation, 0.30}})).audio, cfg);
    const auto events = detect_prolongations(*a.features, cfg);
    REQUIRE(events.size() == 1);
    CHECK(events[0].evidence.number("rate_normalized") == 0.0);
    require_replays(events, cfg);
}

TEST_CASE("prolongation: raising theta_sim never adds frames") {
    const auto specs = standard_corpus(5, 12);
    for (const auto& spec : specs) {
        const Analysis a = analyze(generate(spec).audio, RuleConfig{});
        double previous = std::numeric_limits<double>::infinity();
        for (double theta : {0.80, 0.85, 0.90, 0.92, 0.95, 0.97, 0.99}) {
            RuleConfig cfg;
            cfg.theta_sim = theta;
            double frames = 0.0;
            for (const auto& e : detect_prolongations(*a.features, cfg)) frames += e.evidence.number("frames");
            INFO(spec.id << " theta " << theta);
            CHECK(frames <= previous);
            previous = frames;
        }
    }
}

TEST_CASE("sound repetition: window with identical halves") {
    // A 50 ms cycle: 15 frames is exactly three cycles, so both halves see the same samples.
    AudioBuffer cycle = harmonic(160.0, 0.03, 0.4);
    cycle.samples.resize(800, 0.0);
    std::vector<AudioBuffer> parts{silence(0.4)};
    for (int k = 0; k < 30; ++k) parts.push_back(cycle);
    parts.push_back(silence(0.4));
    const RuleConfig cfg = at_rate(3.2);
    const Analysis a = analyze(concat(parts), cfg);
    const auto events = detect_sound_repetitions(*a.features, cfg);
    REQUIRE_FALSE(events.empty());
    const bool exact = std::any_of(events.begin(), events.end(),
                                   [](const auto& e) { return e.evidence.number("dtw_cost") < 1e-9; });
    CHECK(exact);
    require_replays(events, cfg);
}

TEST_CASE("sound repetition: 8 Hz burst train") {
    const RuleConfig cfg = at_rate(3.2);
    const SynthOutput out = generate(around({{SegmentType::RepBurst, 0.0, 4, 0.125}}));
    const Annotation truth = out.annotations.events.front();

    // Oracle: frame energy of the planted interval straight from the samples.
    std::vector<double> energy;
    const auto first = static_cast<std::size_t>(truth.start_s * 16000);
    const auto last = static_cast<std::size_t>(truth.end_s * 16000);
    for (std::size_t s = first; s + 400 <= last; s += 160) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 400; ++k) acc += out.audio.samples[s + k] * out.audio.samples[s + k];
        energy.push_back(10.0 * std::log10(acc / 400.0 + 1e-12));
    }
    const auto r = autocorrelation(energy, 40);
    std::size_t best = 5;
    for (std::size_t k = 5; k <= 40; ++k) {
        if (r[k] > r[best]) best = k;
    }
    CHECK(std::abs(static_cast<double>(best) * 0.010 - 0.125) <= 0.010);

    const Analysis a = analyze(out.audio, cfg);
    const auto events = detect_sound_repetitions(*a.features, cfg);
    REQUIRE(events.size() == 1);
    CHECK(events[0].evidence.number("cycle_count") >= 2);
    CHECK(std::abs(events[0].evidence.number("acf_lag_s") - 0.125) <= 0.010);
    CHECK(events[0].evidence.number("repetition_score") > cfg.theta_r);
    CHECK(interval_iou(events[0].start_s, events[0].end_s, truth.start_s, truth.end_s) >= 0.5);
    require_replays(events, cfg);
}

TEST_CASE("sound repetition: silence and steady tones are quiet") {
    const RuleConfig cfg = at_rate(3.2);
    const AudioBuffer quiet = concat({harmonic(150.0, 0.3, 0.4), silence(2.0), harmonic(150.0, 0.3, 0.4)});
    CHECK(detect_sound_repetitions(*analyze(quiet, cfg).features, cfg).empty());
    const AudioBuffer hum = harmonic(150.0, 2.0, 0.4);
    CHECK(detect_sound_repetitions(*analyze(hum, cfg).features, cfg).empty());
}

TEST_CASE("sound repetition: raising theta_dtw never removes events") {
    const auto specs = standard_corpus(9, 12);
    for (const auto& spec : specs) {
        const Analysis a = analyze(generate(spec).audio, RuleConfig{});
        std::size_t previous = 0;
        for (double theta : {0.05, 0.1, 0.2, 0.3, 0.4, 0.6}) {
            RuleConfig cfg;
            cfg.theta_dtw = theta;
            const std::size_t count = detect_sound_repetitions(*a.features, cfg).size();
            INFO(spec.id << " theta " << theta);
            CHECK(count >= previous);
            previous = count;
        }
    }
}

TEST_CASE("repetition_score on constructed tracks") {
    const RuleConfig cfg;
    const std::size_t n = 200;
    SUBCASE("8 Hz modulation in every track") {
        FeatureSet fs = tracks(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double p = std::sin(2.0 * std::numbers::pi * 8.0 * fs.energy.time(i));
            fs.energy[i] = -30.0 + 10.0 * p;
            fs.flux[i] = 0.3 + 0.2 * p;
            fs.centroid[i] = 1500.0 + 400.0 * p;
        }
        const RepetitionScore rs = repetition_score(fs, 1.0, cfg);
        CHECK(rs.score == doctest::Approx(1.0).epsilon(0.05));
        CHECK(rs.score > cfg.theta_r);
        CHECK(std::abs(rs.lag_s - 0.125) <= 0.010);
    }
    SUBCASE("white noise") {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> g;
        for (int trial = 0; trial < 5; ++trial) {
            FeatureSet fs = tracks(n);
            for (std::size_t i = 0; i < n; ++i) {
                fs.energy[i] = -30.0 + 5.0 * g(rng);
                fs.flux[i] = 0.3 + 0.1 * g(rng);
                fs.centroid[i] = 1500.0 + 300.0 * g(rng);
            }
            CHECK(repetition_score(fs, 1.0, cfg).score < cfg.theta_r);
        }
    }
    SUBCASE("constant feature carries all the weight") {
        FeatureSet fs = tracks(n);
        std::mt19937_64 rng(2);
        std::normal_distribution<double> g;
        for (std::size_t i = 0; i < n; ++i) {
            fs.energy[i] = -25.0;
            fs.flux[i] = std::sin(2.0 * std::numbers::pi * 8.0 * fs.energy.time(i));
            fs.centroid[i] = g(rng);
        }
        RuleConfig only_energy = cfg;
        only_energy.acf_weight_energy = 1.0;
        only_energy.acf_weight_flux = 0.0;
        only_energy.acf_weight_centroid = 0.0;
        CHECK(repetition_score(fs, 1.0, only_energy).score == 0.0);
    }
    SUBCASE("outside the recording") {
        const FeatureSet fs = tracks(n);
        CHECK_THROWS_AS(repetition_score(fs, -0.1, cfg), std::out_of_range);
        CHECK_THROWS_AS(repetition_score(fs, 10.0, cfg), std::out_of_range);
    }
}

TEST_CASE("count_cycles") {
    std::vector<double> periodic(30), flat(30, -20.0), ramp(30);
    for (std::size_t i = 0; i < 30; ++i) {
        periodic[i] = -30.0 + 10.0 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / 12.5);
        ramp[i] = -40.0 + static_cast<double>(i);
    }
    CHECK(count_cycles(periodic) >= 2);
    CHECK(count_cycles(flat) == 0);
    CHECK(count_cycles(ramp) == 0);
    CHECK(count_cycles(std::vector<double>(5, 1.0)) == 0);
}

TEST_CASE("word repetition") {
    const RuleConfig cfg = at_rate(3.2);
    const AudioBuffer word = harmonic(140.0, 0.2, 0.4);
    SUBCASE("identical intervals") {
        const AudioBuffer audio = concat({silence(1.0), word, silence(0.1), word, silence(1.0)});
        const Analysis a = analyze(audio, cfg);
        const WordAlignment align{{"The", 1.0, 1.2}, {"the,", 1.3, 1.5}};
        const auto events = detect_word_repetitions(*a.features, align, cfg);
        REQUIRE(events.size() == 1);
        CHECK(events[0].start_s == 1.0);
        CHECK(events[0].end_s == 1.5);
        CHECK(events[0].evidence.number("dtw_cost") == 0.0);
        CHECK(events[0].evidence.text("matched_word") == "The");
        require_replays(events, cfg);
    }
    SUBCASE("onsets too far apart") {
        const AudioBuffer audio = concat({silence(1.0), word, silence(1.8), word, silence(1.0)});
        const Analysis a = analyze(audio, cfg);
        const WordAlignment align{{"the", 1.0, 1.2}, {"the", 3.0, 3.2}};
        CHECK(detect_word_repetitions(*a.features, align, cfg).empty());
    }
    SUBCASE("same text, different sound") {
        const AudioBuffer audio = concat({silence(1.0), word, silence(0.1), white_noise(0.2, 0.4, 3), silence(1.0)});
        const Analysis a = analyze(audio, cfg);
        const WordAlignment align{{"the", 1.0, 1.2}, {"the", 1.3, 1.5}};
        CHECK(detect_word_repetitions(*a.features, align, cfg).empty());
        const FeatureSet& fs = *a.features;
        const DtwResult d = segment_dtw(fs, {99, 119}, {129, 149});
        CHECK(d.normalized() > 0.5);
    }
    SUBCASE("different words") {
        const AudioBuffer audio = concat({silence(1.0), word, silence(0.1), word, silence(1.0)});
        const Analysis a = analyze(audio, cfg);
        const WordAlignment align{{"the", 1.0, 1.2}, {"a", 1.3, 1.5}};
        CHECK(detect_word_repetitions(*a.features, align, cfg).empty());
    }
    SUBCASE("malformed alignment") {
        const Analysis a = analyze(concat({silence(1.0), word, silence(1.0)}), cfg);
        CHECK_THROWS_AS(detect_word_repetitions(*a.features, {{"a", 1.0, 1.2}, {"b", 1.1, 1.3}}, cfg), FormatError);
        CHECK_THROWS_AS(detect_word_repetitions(*a.features, {{"a", 1.2, 1.0}}, cfg), FormatError);
    }
}

TEST_CASE("alignment parsing") {
    CHECK(normalize_token("Hello,") == "hello");
    CHECK(normalize_token("  D'Arcy!") == "darcy");
    CHECK(normalize_token("...") == "");

    std::istringstream csv("word,start_s,end_s\nthe,1.0,1.2\nthe,1.3,1.5\n");
    const WordAlignment a = parse_alignment_csv(csv);
    REQUIRE(a.size() == 2);
    CHECK(a[1].word == "the");
    CHECK(a[1].start_s == 1.3);

    std::ostringstream back;
    write_alignment_csv(back, a);
    std::istringstream again(back.str());
    const WordAlignment b = parse_alignment_csv(again);
    REQUIRE(b.size() == 2);
    CHECK(b[0].end_s == a[0].end_s);

    std::istringstream overlap("a,1.0,1.5\nb,1.4,2.0\n");
    CHECK_THROWS_AS(parse_alignment_csv(overlap), FormatError);
    std::istringstream garbage("word,start_s,end_s\na,one,two\n");
    CHECK_THROWS_AS(parse_alignment_csv(garbage), FormatError);

    std::istringstream grid(R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 2.0
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 2.0
        intervals: size = 1
        intervals [1]:
            xmin = 0
            xmax = 2.0
            text = "x"
    item [2]:
        class = "IntervalTier"
        name = "words"
        xmin = 0
        xmax = 2.0
        intervals: size = 3
        intervals [1]:
            xmin = 0
            xmax = 1.0
            text = ""
        intervals [2]:
            xmin = 1.0
            xmax = 1.2
            text = "the"
        intervals [3]:
            xmin = 1.3
            xmax = 1.5
            text = "the"
)");
    const WordAlignment g = parse_textgrid(grid);
    REQUIRE(g.size() == 2);
    CHECK(g[0].word == "the");
    CHECK(g[0].start_s == 1.0);
    CHECK(g[1].end_s == 1.5);
}

TEST_CASE("blocks") {
    const RuleConfig cfg = at_rate(3.2);
    SUBCASE("400 ms of silence after a cut-off onset") {
        const SynthOutput out = generate(around({{SegmentType::SilentBlock, 0.43}}));
        const Analysis a = analyze(out.audio, cfg);
        const auto events = detect_blocks(*a.features, a.vad, cfg);
        REQUIRE(events.size() == 1);
        CHECK(events[0].evidence.text("variant") == "silent");
        CHECK(events[0].evidence.number("silence_s") > 0.35);
        CHECK(events[0].evidence.number("preceding_flux") > events[0].evidence.number("flux_threshold"));
        const Annotation& truth = out.annotations.events.front();
        CHECK(interval_iou(events[0].start_s, events[0].end_s, truth.start_s, truth.end_s) >= 0.5);
        require_replays(events, cfg);
    }
    SUBCASE("300 ms of silence is not a block") {
        const Analysis a = analyze(generate(around({{SegmentType::SilentBlock, 0.33}})).audio, cfg);
        CHECK(detect_blocks(*a.features, a.vad, cfg).empty());
    }
    SUBCASE("low-level frication inside speech") {
        const SynthOutput out = generate(around({{SegmentType::AudibleBlock, 0.25}}));
        const Analysis a = analyze(out.audio, cfg);
        const auto events = detect_blocks(*a.features, a.vad, cfg);
        REQUIRE(events.size() == 1);
        CHECK(events[0].evidence.text("variant") == "audible");
        CHECK(events[0].evidence.number("rms_rel_db") <= cfg.audible_block_rms_db);
        CHECK(events[0].evidence.number("centroid_hz") >= cfg.audible_block_centroid_hz);
        CHECK(events[0].evidence.number("duration_s") >= cfg.audible_block_min_s);
        require_replays(events, cfg);
    }
    SUBCASE("leading silence never counts") {
        SynthSpec s = around({});
        s.plan.insert(s.plan.begin(), {SegmentType::Pause, 1.0});
        const Analysis a = analyze(generate(s).audio, cfg);
        CHECK(detect_blocks(*a.features, a.vad, cfg).empty());
    }
}

TEST_CASE("replay rejects tampered evidence") {
    const RuleConfig cfg = at_rate(3.2);
    const Analysis a = analyze(generate(around({{SegmentType::Prolongation, 0.42}})).audio, cfg);
    auto ev = detect_prolongations(*a.features, cfg).at(0);
    CHECK(replay_decision(ev, cfg));
    RuleConfig stricter = cfg;
    stricter.alpha = 1.5;
    CHECK_FALSE(replay_decision(ev, stricter));
    ev.evidence = Evidence{};
    CHECK_FALSE(replay_decision(ev, cfg));
}

TEST_CASE("detectors are deterministic") {
    const SynthSpec spec = standard_corpus(3, 1).front();
    const SynthOutput out = generate(spec);
    const RuleConfig cfg;
    const auto first = run_detectors(analyze(out.audio, cfg), cfg, &out.alignment);
    const auto second = run_detectors(analyze(out.audio, cfg), cfg, &out.alignment);
    CHECK(first == second);
}
