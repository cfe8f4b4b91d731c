#include "dysfluency/features.hpp"

#include "dysfluency/errors.hpp"
#include "fft.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace dysfluency {

namespace {

using detail::RealFft;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

const std::vector<double>& hann_window() {
    static const std::vector<double> w = [] {
        std::vector<double> v(kWindowSamples);
        for (std::size_t n = 0; n < kWindowSamples; ++n) {
            v[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                        static_cast<double>(kWindowSamples - 1));
        }
        return v;
    }();
    return w;
}

// Row-major [filter][bin] over the 257 bins of a 512-pt transform.
struct MelBank {
    static constexpr std::size_t kBins = kMfccFftSize / 2 + 1;
    std::vector<double> weights;
    std::array<std::size_t, kMelFilters> first{};
    std::array<std::size_t, kMelFilters> last{};
};

const MelBank& mel_bank() {
    static const MelBank bank = [] {
        MelBank b;
        b.weights.assign(kMelFilters * MelBank::kBins, 0.0);
        const double top = hz_to_mel(kCanonicalSampleRate / 2.0);
        std::array<double, kMelFilters + 2> edges{};
        for (std::size_t j = 0; j < edges.size(); ++j) {
            edges[j] = mel_to_hz(top * static_cast<double>(j) / static_cast<double>(kMelFilters + 1));
        }
        for (std::size_t i = 0; i < kMelFilters; ++i) {
            const double lo = edges[i], mid = edges[i + 1], hi = edges[i + 2];
            b.first[i] = MelBank::kBins;
            b.last[i] = 0;
            for (std::size_t k = 0; k < MelBank::kBins; ++k) {
                const double f = static_cast<double>(k) * kCanonicalSampleRate / static_cast<double>(kMfccFftSize);
                double w = 0.0;
                if (f >= lo && f <= mid) {
                    w = (f - lo) / (mid - lo);
                } else if (f > mid && f <= hi) {
                    w = (hi - f) / (hi - mid);
                }
                if (w > 0.0) {
                    b.weights[i * MelBank::kBins + k] = w;
                    b.first[i] = std::min(b.first[i], k);
                    b.last[i] = std::max(b.last[i], k);
                }
            }
        }
        return b;
    }();
    return bank;
}

// Orthonormal DCT-II basis, rows c0..c12.
const std::vector<double>& dct_basis() {
    static const std::vector<double> basis = [] {
        std::vector<double> m(kMfccStatic * kMelFilters);
        const double n = static_cast<double>(kMelFilters);
        for (std::size_t k = 0; k < kMfccStatic; ++k) {
            const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (std::size_t j = 0; j < kMelFilters; ++j) {
                m[k * kMelFilters + j] =
                    scale * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(j) + 0.5) / n);
            }
        }
        return m;
    }();
    return basis;
}

void load_windowed_frame(const AudioBuffer& audio, std::size_t frame, std::span<double> out) {
    const auto& w = hann_window();
    const double* x = audio.samples.data() + frame * kHopSamples;
    for (std::size_t n = 0; n < kWindowSamples; ++n) out[n] = x[n] * w[n];
    std::fill(out.begin() + kWindowSamples, out.end(), 0.0);
}

void require_frames(const AudioBuffer& audio, const char* who) {
    if (frame_count(audio.samples.size()) == 0) {
        throw std::invalid_argument(std::string(who) + ": buffer shorter than one 25 ms window");
    }
}

// Zero-phase second-order Butterworth low-pass with steady-state edges.
void lowpass_filtfilt(std::vector<double>& x, double cutoff_hz, double rate) {
    if (x.empty()) return;
    const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate;
    const double alpha = std::sin(w0) / (2.0 * std::numbers::sqrt2 / 2.0);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    const double b0 = (1.0 - cw) / 2.0 / a0, b1 = (1.0 - cw) / a0, b2 = b0;
    const double a1 = -2.0 * cw / a0, a2 = (1.0 - alpha) / a0;

    const auto pass = [&](auto begin, auto end) {
        const double c = *begin;
        double s2 = (b2 - a2) * c;
        double s1 = c * (1.0 - b0);
        for (auto it = begin; it != end; ++it) {
            const double in = *it;
            const double y = b0 * in + s1;
            s1 = b1 * in - a1 * y + s2;
            s2 = b2 * in - a2 * y;
            *it = y;
        }
    };
    pass(x.begin(), x.end());
    pass(x.rbegin(), x.rend());
}

}  // namespace

FrameSeries regression_deltas(const FrameSeries& series) {
    FrameSeries out = FrameSeries::matrix(series.size(), series.dim);
    const auto frames = static_cast<std::ptrdiff_t>(series.size());
    if (frames == 0) return out;
    const auto at = [&](std::ptrdiff_t t) { return series.row(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(t, 0, frames - 1))); };
    for (std::ptrdiff_t t = 0; t < frames; ++t) {
        auto row = out.row(static_cast<std::size_t>(t));
        const auto p1 = at(t + 1), m1 = at(t - 1), p2 = at(t + 2), m2 = at(t - 2);
        for (std::size_t d = 0; d < series.dim; ++d) {
            row[d] = ((p1[d] - m1[d]) + 2.0 * (p2[d] - m2[d])) / 10.0;
        }
    }
    return out;
}

FrameSeries compute_mfcc(const AudioBuffer& audio) {
    require_frames(audio, "compute_mfcc");
    const std::size_t frames = frame_count(audio.samples.size());
    const auto& bank = mel_bank();
    const auto& dct = dct_basis();

    FrameSeries stat = FrameSeries::matrix(frames, kMfccStatic);
    RealFft fft(kMfccFftSize);
    std::array<double, MelBank::kBins> mag{};
    std::array<double, kMelFilters> logmel{};
    for (std::size_t f = 0; f < frames; ++f) {
        load_windowed_frame(audio, f, fft.real());
        fft.forward();
        const auto spec = fft.spectrum();
        for (std::size_t k = 0; k < MelBank::kBins; ++k) mag[k] = std::abs(spec[k]);
        for (std::size_t i = 0; i < kMelFilters; ++i) {
            double e = 0.0;
            const double* w = bank.weights.data() + i * MelBank::kBins;
            for (std::size_t k = bank.first[i]; k <= bank.last[i] && k < MelBank::kBins; ++k) e += w[k] * mag[k];
            logmel[i] = std::log(std::max(e, 1e-10));
        }
        auto row = stat.row(f);
        for (std::size_t k = 0; k < kMfccStatic; ++k) {
            double c = 0.0;
            for (std::size_t j = 0; j < kMelFilters; ++j) c += dct[k * kMelFilters + j] * logmel[j];
            row[k] = c;
        }
    }

    const FrameSeries d1 = regression_deltas(stat);
    const FrameSeries d2 = regression_deltas(d1);
    FrameSeries out = FrameSeries::matrix(frames, kMfccDim);
    for (std::size_t f = 0; f < frames; ++f) {
        auto row = out.row(f);
        std::copy_n(stat.row(f).begin(), kMfccStatic, row.begin());
        std::copy_n(d1.row(f).begin(), kMfccStatic, row.begin() + kMfccStatic);
        std::copy_n(d2.row(f).begin(), kMfccStatic, row.begin() + 2 * kMfccStatic);
    }
    return out;
}

double frame_correlation(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min({a.size(), b.size(), kMfccStatic});
    if (n < 2) return 0.0;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

SpectralTracks compute_spectral(const AudioBuffer& audio, double silence_threshold_db) {
    const std::size_t frames = frame_count(audio.samples.size());
    SpectralTracks t{FrameSeries::scalar(frames), FrameSeries::scalar(frames), FrameSeries::scalar(frames)};
    if (frames == 0) return t;
    const auto energy = frame_energy_db(audio);

    RealFft small(kMfccFftSize);
    RealFft large(kFluxFftSize);
    constexpr std::size_t kSmallBins = kMfccFftSize / 2 + 1;
    constexpr std::size_t kLargeBins = kFluxFftSize / 2 + 1;
    std::vector<double> prev(kLargeBins, 0.0), cur(kLargeBins, 0.0);
    const double bin_hz = static_cast<double>(audio.sample_rate) / static_cast<double>(kMfccFftSize);

    for (std::size_t f = 0; f < frames; ++f) {
        load_windowed_frame(audio, f, small.real());
        small.forward();
        const auto spec = small.spectrum();
        double wsum = 0.0, fsum = 0.0;
        for (std::size_t k = 0; k < kSmallBins; ++k) {
            const double m = std::abs(spec[k]);
            wsum += m;
            fsum += m * static_cast<double>(k) * bin_hz;
        }
        if (wsum > 0.0) {
            const double c = fsum / wsum;
            double var = 0.0;
            for (std::size_t k = 0; k < kSmallBins; ++k) {
                const double d = static_cast<double>(k) * bin_hz - c;
                var += std::abs(spec[k]) * d * d;
            }
            t.centroid[f] = c;
            t.spread[f] = std::sqrt(var / wsum);
        }

        load_windowed_frame(audio, f, large.real());
        large.forward();
        const auto lspec = large.spectrum();
        double norm_cur = 0.0, norm_prev = 0.0, rect = 0.0;
        for (std::size_t k = 0; k < kLargeBins; ++k) {
            cur[k] = std::abs(lspec[k]);
            norm_cur += cur[k] * cur[k];
            norm_prev += prev[k] * prev[k];
            const double d = cur[k] - prev[k];
            if (d > 0.0) rect += d * d;
        }
        const bool both_silent =
            f == 0 || (energy[f] <= silence_threshold_db && energy[f - 1] <= silence_threshold_db);
        const double denom = std::sqrt(std::max(norm_cur, norm_prev));
        t.flux[f] = (both_silent || denom <= 0.0) ? 0.0 : std::sqrt(rect) / denom;
        std::swap(prev, cur);
    }
    return t;
}

std::vector<double> compute_envelope(const AudioBuffer& audio) {
    const std::size_t n = audio.samples.size();
    std::vector<double> env(n, 0.0);
    if (n == 0) return env;
    const std::size_t m = detail::next_pow2(n);

    detail::ComplexFft inverse(m, true);
    {
        RealFft fwd(m);
        auto in = fwd.real();
        std::copy(audio.samples.begin(), audio.samples.end(), in.begin());
        std::fill(in.begin() + static_cast<std::ptrdiff_t>(n), in.end(), 0.0);
        fwd.forward();
        const auto spec = fwd.spectrum();
        auto z = inverse.data();
        std::fill(z.begin(), z.end(), std::complex<double>{});
        z[0] = spec[0];
        for (std::size_t k = 1; k < m / 2; ++k) z[k] = 2.0 * spec[k];
        if (m > 1) z[m / 2] = spec[m / 2];
    }
    inverse.execute();
    const auto z = inverse.data();
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(z[i]) * scale;
    lowpass_filtfilt(env, 30.0, static_cast<double>(audio.sample_rate));
    for (auto& v : env) v = std::max(v, 0.0);
    return env;
}

FeatureSet extract_features(const AudioBuffer& audio, const VadMask& vad, const RuleConfig& cfg) {
    require_frames(audio, "extract_features");
    FeatureSet fs;
    fs.silence_threshold_db = vad.threshold_db;

    fs.energy = FrameSeries::scalar(0);
    fs.energy.values = frame_energy_db(audio);
    fs.mfcc = compute_mfcc(audio);

    const PitchOptions pitch{cfg.f0_min_hz, cfg.f0_max_hz, cfg.voicing_threshold};
    const Periodicity periodicity = compute_periodicity(audio, pitch);
    fs.f0 = f0_from_periodicity(periodicity, audio.sample_rate, pitch);
    fs.hnr = hnr_from_periodicity(periodicity, pitch);

    auto spectral = compute_spectral(audio, vad.threshold_db);
    fs.centroid = std::move(spectral.centroid);
    fs.spread = std::move(spectral.spread);
    fs.flux = std::move(spectral.flux);

    fs.envelope = compute_envelope(audio);
    fs.envelope_rate = audio.sample_rate;

    if (cfg.calibrated_speaking_rate > 0.0) {
        fs.speaking_rate = cfg.calibrated_speaking_rate;
    } else {
        try {
            fs.speaking_rate = estimate_speaking_rate(audio, vad, cfg);
        } catch (const InsufficientSpeechError&) {
            fs.speaking_rate.reset();
        }
    }
    return fs;
}

void dump_features_csv(const FeatureSet& fs, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto write_track = [&](const char* name, const FrameSeries& s) {
        const auto path = dir / (std::string(name) + ".csv");
        std::ofstream out(path);
        if (!out) throw IoError("cannot write feature dump '" + path.string() + "'");
        out.precision(9);
        out << "time_s";
        if (s.dim == 1) {
            out << ",value\n";
        } else {
            for (std::size_t d = 0; d < s.dim; ++d) out << ",v" << d;
            out << '\n';
        }
        for (std::size_t i = 0; i < s.size(); ++i) {
            out << s.time(i);
            for (double v : s.row(i)) out << ',' << v;
            out << '\n';
        }
    };
    write_track("mfcc", fs.mfcc);
    write_track("f0", fs.f0);
    write_track("hnr", fs.hnr);
    write_track("centroid", fs.centroid);
    write_track("spread", fs.spread);
    write_track("flux", fs.flux);
    write_track("energy", fs.energy);

    const auto path = dir / "envelope.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write feature dump '" + path.string() + "'");
    out.precision(9);
    out << "time_s,value\n";
    // One point per millisecond keeps the file plottable.
    const std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>(fs.envelope_rate / 1000));
    for (std::size_t i = 0; i < fs.envelope.size(); i += step) {
        out << static_cast<double>(i) / fs.envelope_rate << ',' << fs.envelope[i] << '\n';
    }
}

}  // namespace dysfluency
