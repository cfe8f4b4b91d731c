#include "dysfluency/audio.hpp"
#include "dysfluency/errors.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace dysfluency;
using namespace testing;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
}

// Interleaved integer PCM, little endian.
std::vector<std::uint8_t> pcm_wav(const std::vector<std::int32_t>& interleaved, int channels, int rate, int bits,
                                  std::uint16_t format = 1) {
    const int bytes = bits / 8;
    std::vector<std::uint8_t> b;
    const auto data_size = static_cast<std::uint32_t>(interleaved.size() * bytes);
    b.insert(b.end(), {'R', 'I', 'F', 'F'});
    put_u32(b, 36 + data_size);
    b.insert(b.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(b, 16);
    put_u16(b, format);
    put_u16(b, static_cast<std::uint16_t>(channels));
    put_u32(b, static_cast<std::uint32_t>(rate));
    put_u32(b, static_cast<std::uint32_t>(rate * channels * bytes));
    put_u16(b, static_cast<std::uint16_t>(channels * bytes));
    put_u16(b, static_cast<std::uint16_t>(bits));
    b.insert(b.end(), {'d', 'a', 't', 'a'});
    put_u32(b, data_size);
    for (std::int32_t v : interleaved) {
        for (int i = 0; i < bytes; ++i) b.push_back(static_cast<std::uint8_t>(static_cast<std::uint32_t>(v) >> (8 * i)));
    }
    return b;
}

double rms_of(const AudioBuffer& b) { return rms_db(b.samples); }

}  // namespace

TEST_CASE("load_audio: one second of zeros") {
    TempDir dir;
    write_wav(dir / "zeros.wav", silence(1.0));
    const AudioBuffer b = load_audio(dir / "zeros.wav");
    CHECK(b.size() == 16000);
    CHECK(b.sample_rate == 16000);
    CHECK(b.duration_s() == 1.0);
    for (double s : b.samples) REQUIRE(s == 0.0);
}

TEST_CASE("load_audio: stereo channels are averaged") {
    std::vector<std::int32_t> frames;
    for (int i = 0; i < 1600; ++i) {
        frames.push_back(16384);
        frames.push_back(-16384);
    }
    const AudioBuffer b = decode_wav(pcm_wav(frames, 2, 16000, 16));
    CHECK(b.size() == 1600);
    for (double s : b.samples) REQUIRE(s == 0.0);

    std::vector<std::int32_t> left_only;
    for (int i = 0; i < 100; ++i) {
        left_only.push_back(16384);
        left_only.push_back(0);
    }
    const AudioBuffer l = decode_wav(pcm_wav(left_only, 2, 16000, 16));
    CHECK(l.samples[0] == doctest::Approx(0.25));
}

TEST_CASE("load_audio: 24- and 32-bit PCM scale to [-1, 1]") {
    const AudioBuffer b24 = decode_wav(pcm_wav({-(1 << 23), (1 << 22)}, 1, 8000, 24));
    CHECK(b24.samples[0] == doctest::Approx(-1.0));
    CHECK(b24.samples[1] == doctest::Approx(0.5));
    CHECK(b24.sample_rate == 8000);
    const AudioBuffer b32 = decode_wav(pcm_wav({INT32_MIN, 1 << 30}, 1, 16000, 32));
    CHECK(b32.samples[0] == doctest::Approx(-1.0));
    CHECK(b32.samples[1] == doctest::Approx(0.5));
}

TEST_CASE("load_audio: errors") {
    TempDir dir;
    write_text(dir / "empty.wav", "");
    CHECK_THROWS_AS(load_audio(dir / "empty.wav"), FormatError);
    try {
        load_audio(dir / "empty.wav");
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("empty.wav") != std::string::npos);
        CHECK(msg.find("corrupt header") != std::string::npos);
    }
    CHECK_THROWS_AS(load_audio(dir / "missing.wav"), IoError);

    write_text(dir / "text.wav", "this is not a riff file at all");
    CHECK_THROWS_AS(load_audio(dir / "text.wav"), FormatError);

    // A-law (format tag 6) is not supported.
    auto alaw = pcm_wav({1, 2, 3}, 1, 8000, 8, 6);
    CHECK_THROWS_WITH_AS(decode_wav(alaw), doctest::Contains("unsupported codec"), FormatError);

    auto no_samples = pcm_wav({}, 1, 16000, 16);
    CHECK_THROWS_AS(decode_wav(no_samples), FormatError);

    auto truncated = pcm_wav({1, 2, 3, 4}, 1, 16000, 16);
    truncated.resize(20);
    CHECK_THROWS_AS(decode_wav(truncated), FormatError);
}

TEST_CASE("wav round trip preserves float samples") {
    const AudioBuffer src = white_noise(0.25, 0.9, 3);
    const AudioBuffer back = decode_wav(encode_wav(src));
    REQUIRE(back.size() == src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        REQUIRE(back.samples[i] == doctest::Approx(src.samples[i]).epsilon(1e-6));
    }
}

TEST_CASE("resample: 440 Hz at 48 kHz keeps its DFT peak") {
    const AudioBuffer in = sine(440.0, 1.0, 0.5, 48000);
    const AudioBuffer out = resample(in, 16000);
    CHECK(out.sample_rate == 16000);
    CHECK(std::abs(static_cast<double>(out.size()) - 16000.0) <= 1.0);
    const std::vector<double> mid(out.samples.begin() + 2000, out.samples.end() - 2000);
    CHECK(dft_peak_hz(mid, 16000, 300, 600) == doctest::Approx(440.0).epsilon(2.0 / 440.0));
}

TEST_CASE("resample: identity at the target rate, errors on bad rates") {
    const AudioBuffer in = white_noise(0.1, 0.3, 5);
    const AudioBuffer out = resample(in, 16000);
    CHECK(out.samples == in.samples);
    CHECK_THROWS_AS(resample(in, 0), std::invalid_argument);
    CHECK_THROWS_AS(resample(in, -8000), std::invalid_argument);
}

TEST_CASE("resample: down to 8 kHz and back keeps a sub-4 kHz tone") {
    for (double hz : {250.0, 1000.0, 3100.0}) {
        const AudioBuffer in = sine(hz, 1.0, 0.5);
        const AudioBuffer round = resample(resample(in, 8000), 16000);
        CHECK(std::abs(static_cast<double>(round.size()) - 16000.0) <= 2.0);
        const std::vector<double> mid(round.samples.begin() + 2000, round.samples.end() - 2000);
        CHECK(dft_peak_hz(mid, 16000, hz - 100, hz + 100) == doctest::Approx(hz).epsilon(2.0 / hz));
    }
}

TEST_CASE("normalize_loudness") {
    SUBCASE("full-scale sine to -20 dB") {
        const AudioBuffer in = sine(1000.0, 1.0, 1.0);
        CHECK(rms_of(in) == doctest::Approx(-3.0103).epsilon(1e-3));
        const LoudnessResult r = normalize_loudness(in, -20.0);
        CHECK(r.gain == doctest::Approx(std::pow(10.0, -16.9897 / 20.0)).epsilon(1e-3));
        CHECK(std::abs(rms_of(r.audio) + 20.0) <= 0.1);
        CHECK_FALSE(r.silent);
    }
    SUBCASE("silence is returned unchanged with a flag") {
        const LoudnessResult r = normalize_loudness(silence(0.5));
        CHECK(r.silent);
        CHECK(r.gain == 1.0);
        CHECK(r.audio.samples == silence(0.5).samples);
    }
    SUBCASE("already at target") {
        const AudioBuffer in = normalize_loudness(white_noise(1.0, 0.5, 9)).audio;
        const LoudnessResult r = normalize_loudness(in);
        CHECK(r.gain == doctest::Approx(1.0).epsilon(0.01));
    }
    SUBCASE("idempotent") {
        std::mt19937_64 rng(11);
        for (int t = 0; t < 20; ++t) {
            const double amp = std::uniform_real_distribution<double>(0.001, 1.0)(rng);
            const AudioBuffer in = white_noise(0.3, amp, rng());
            const AudioBuffer once = normalize_loudness(in).audio;
            const AudioBuffer twice = normalize_loudness(once).audio;
            CHECK(std::abs(rms_of(once) - rms_of(twice)) <= 0.01);
        }
    }
    CHECK_THROWS_AS(normalize_loudness(AudioBuffer{}), std::invalid_argument);
}

TEST_CASE("preemphasize") {
    AudioBuffer ones;
    ones.samples = {1.0, 1.0, 1.0};
    const AudioBuffer y = preemphasize(ones, 0.97);
    CHECK(y.samples[0] == 1.0);
    CHECK(y.samples[1] == doctest::Approx(0.03));
    CHECK(y.samples[2] == doctest::Approx(0.03));

    AudioBuffer impulse;
    impulse.samples = {1.0, 0.0, 0.0};
    const AudioBuffer h = preemphasize(impulse, 0.97);
    CHECK(h.samples == std::vector<double>{1.0, -0.97, 0.0});

    const AudioBuffer noise = white_noise(0.1, 0.8, 21);
    CHECK(preemphasize(noise, 0.0).samples == noise.samples);

    CHECK_THROWS_AS(preemphasize(noise, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(preemphasize(noise, -0.1), std::invalid_argument);

    SUBCASE("inverse filter recovers the input") {
        std::mt19937_64 rng(4);
        for (int t = 0; t < 50; ++t) {
            const double c = std::uniform_real_distribution<double>(0.0, 0.99)(rng);
            const AudioBuffer x = white_noise(0.05, 1.0, rng());
            const AudioBuffer e = preemphasize(x, c);
            double prev = 0.0;
            for (std::size_t n = 0; n < x.size(); ++n) {
                const double rec = e.samples[n] + (n == 0 ? 0.0 : c * prev);
                REQUIRE(std::abs(rec - x.samples[n]) <= 1e-9);
                prev = rec;
            }
        }
    }
}

TEST_CASE("compute_vad") {
    const RuleConfig cfg;
    SUBCASE("pure silence") {
        const VadMask m = compute_vad(silence(2.0), cfg);
        CHECK(m.speech_frames() == 0);
        CHECK(speech_regions(m).empty());
    }
    SUBCASE("tone padded by silence") {
        const AudioBuffer b = concat({silence(3.0), harmonic(150.0, 1.0, 0.4), silence(3.0)});
        const VadMask m = compute_vad(b, cfg);
        const auto regions = speech_regions(m);
        REQUIRE(regions.size() == 1);
        CHECK(std::abs(regions[0].start_s - 3.0) <= 0.05);
        CHECK(std::abs(regions[0].end_s - 4.0) <= 0.05);
    }
    SUBCASE("tone in low-level noise") {
        const AudioBuffer noise = white_noise(7.0, 0.001, 8);
        AudioBuffer b = concat({silence(3.0), harmonic(150.0, 1.0, 0.4), silence(3.0)});
        for (std::size_t i = 0; i < b.size(); ++i) b.samples[i] += noise.samples[i];
        const auto regions = speech_regions(compute_vad(b, cfg));
        REQUIRE(regions.size() == 1);
        CHECK(std::abs(regions[0].start_s - 3.0) <= 0.05);
        CHECK(std::abs(regions[0].end_s - 4.0) <= 0.05);
    }
    SUBCASE("400 ms internal gap is marked but not trimmed") {
        const AudioBuffer b =
            concat({silence(0.5), harmonic(150.0, 1.0, 0.4), silence(0.4), harmonic(150.0, 1.0, 0.4), silence(0.5)});
        const VadMask m = compute_vad(b, cfg);
        const auto regions = speech_regions(m);
        REQUIRE(regions.size() == 2);
        CHECK(regions[1].start_s - regions[0].end_s == doctest::Approx(0.4).epsilon(0.2));
        const std::size_t mid = static_cast<std::size_t>(1.7 / kHopSeconds);
        CHECK_FALSE(m[mid]);
        const auto kept = ingestion_regions(m, cfg.max_internal_silence_s);
        REQUIRE(kept.size() == 1);
        CHECK(kept[0].start_s == doctest::Approx(regions[0].start_s));
        CHECK(kept[0].end_s == doctest::Approx(regions[1].end_s));
    }
    SUBCASE("gaps over two seconds are trimmed") {
        const AudioBuffer b =
            concat({silence(0.5), harmonic(150.0, 1.0, 0.4), silence(2.5), harmonic(150.0, 1.0, 0.4), silence(0.5)});
        CHECK(ingestion_regions(compute_vad(b, cfg), cfg.max_internal_silence_s).size() == 2);
    }
    SUBCASE("short gaps are bridged by the hangover") {
        const AudioBuffer b =
            concat({silence(0.5), harmonic(150.0, 0.5, 0.4), silence(0.1), harmonic(150.0, 0.5, 0.4), silence(0.5)});
        CHECK(speech_regions(compute_vad(b, cfg)).size() == 1);
    }
    SUBCASE("mask length matches the canonical framing") {
        for (std::size_t n : {400u, 401u, 559u, 560u, 16000u, 16161u}) {
            AudioBuffer b = white_noise(1.0, 0.1, n);
            b.samples.resize(n);
            CHECK(compute_vad(b, cfg).size() == (n - 400) / 160 + 1);
        }
        AudioBuffer tiny;
        tiny.samples.assign(399, 0.1);
        CHECK(compute_vad(tiny, cfg).size() == 0);
    }
}

TEST_CASE("preprocess: canonical output") {
    const AudioBuffer raw = sine(300.0, 1.0, 0.9, 44100);
    const Preprocessed p = preprocess(raw);
    CHECK(p.audio.sample_rate == 16000);
    CHECK(std::abs(p.audio.duration_s() - raw.duration_s()) <= 1.0 / 16000);
    for (double s : p.audio.samples) {
        REQUIRE(std::isfinite(s));
        REQUIRE(std::abs(s) <= 1.0);
    }
    CHECK_FALSE(p.silent);
    CHECK(preprocess(silence(1.0)).silent);
}
