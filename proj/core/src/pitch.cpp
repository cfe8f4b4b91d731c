#include "dysfluency/features.hpp"

#include "fft.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dysfluency {

namespace {
constexpr double kHnrMinDb = -10.0;
constexpr double kHnrMaxDb = 40.0;
constexpr double kOctaveGuard = 0.9;  // prefer the shortest lag within 90% of the best peak
}  // namespace

Periodicity compute_periodicity(const AudioBuffer& audio, const PitchOptions& opts) {
    const std::size_t frames = frame_count(audio.samples.size());
    Periodicity p;
    p.lag.assign(frames, 0.0);
    p.strength.assign(frames, 0.0);
    if (frames == 0) return p;

    const double rate = static_cast<double>(audio.sample_rate);
    const auto min_lag = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(rate / opts.max_hz)));
    const auto max_lag = static_cast<std::size_t>(std::ceil(rate / opts.min_hz));
    const std::size_t span = kWindowSamples + max_lag;
    const std::size_t nfft = detail::next_pow2(span + 1);

    const auto& x = audio.samples;
    const std::size_t n = x.size();
    // Prefix sums of x^2 for the lagged-window energies.
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + x[i] * x[i];
    const auto energy = [&](std::size_t from, std::size_t len) {
        const std::size_t a = std::min(from, n), b = std::min(from + len, n);
        return cum[b] - cum[a];
    };

    detail::RealFft fa(nfft), fb(nfft);
    std::vector<double> ncc(max_lag + 2, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t s = f * kHopSamples;
        const double ea = energy(s, kWindowSamples);
        if (ea <= 1e-20) continue;

        auto ra = fa.real();
        auto rb = fb.real();
        std::fill(ra.begin(), ra.end(), 0.0);
        std::fill(rb.begin(), rb.end(), 0.0);
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(s), kWindowSamples, ra.begin());
        const std::size_t avail = std::min(span, n - s);
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(s), avail, rb.begin());
        fa.forward();
        fb.forward();
        auto sa = fa.spectrum();
        auto sb = fb.spectrum();
        for (std::size_t k = 0; k < sb.size(); ++k) sb[k] = std::conj(sa[k]) * sb[k];
        fb.inverse();
        const auto corr = fb.real();

        double best = -1.0;
        for (std::size_t k = min_lag - 1; k <= max_lag + 1; ++k) {
            const double eb = energy(s + k, kWindowSamples);
            ncc[k] = eb > 1e-20 ? corr[k] / static_cast<double>(nfft) / std::sqrt(ea * eb) : 0.0;
            if (k >= min_lag && k <= max_lag) best = std::max(best, ncc[k]);
        }
        if (best <= 0.0) continue;

        std::size_t pick = 0;
        for (std::size_t k = min_lag; k <= max_lag; ++k) {
            if (ncc[k] >= ncc[k - 1] && ncc[k] >= ncc[k + 1] && ncc[k] >= kOctaveGuard * best) {
                pick = k;
                break;
            }
        }
        if (pick == 0) continue;

        const double ym = ncc[pick - 1], y0 = ncc[pick], yp = ncc[pick + 1];
        const double denom = ym - 2.0 * y0 + yp;
        double delta = 0.0;
        if (std::abs(denom) > 1e-15) delta = std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5);
        p.lag[f] = static_cast<double>(pick) + delta;
        p.strength[f] = std::clamp(y0 - 0.25 * (ym - yp) * delta, -1.0, 1.0);
    }
    return p;
}

FrameSeries f0_from_periodicity(const Periodicity& p, int sample_rate, const PitchOptions& opts) {
    const std::size_t frames = p.lag.size();
    std::vector<double> raw(frames, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        if (p.lag[f] <= 0.0 || p.strength[f] < opts.voicing_threshold) continue;
        const double hz = sample_rate / p.lag[f];
        if (hz >= opts.min_hz && hz <= opts.max_hz) raw[f] = hz;
    }
    FrameSeries out = FrameSeries::scalar(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        std::array<double, 3> w{raw[f == 0 ? 0 : f - 1], raw[f], raw[f + 1 < frames ? f + 1 : f]};
        std::sort(w.begin(), w.end());
        out[f] = w[1];
    }
    return out;
}

FrameSeries hnr_from_periodicity(const Periodicity& p, const PitchOptions& opts) {
    FrameSeries out = FrameSeries::scalar(p.strength.size(), kHnrMinDb);
    for (std::size_t f = 0; f < p.strength.size(); ++f) {
        const double r = p.strength[f];
        if (p.lag[f] <= 0.0 || r < opts.voicing_threshold) continue;
        const double rr = std::min(r, 1.0 - 1e-12);
        out[f] = std::clamp(10.0 * std::log10(rr / (1.0 - rr)), kHnrMinDb, kHnrMaxDb);
    }
    return out;
}

FrameSeries compute_f0(const AudioBuffer& audio, const PitchOptions& opts) {
    return f0_from_periodicity(compute_periodicity(audio, opts), audio.sample_rate, opts);
}

FrameSeries compute_hnr(const AudioBuffer& audio, const PitchOptions& opts) {
    return hnr_from_periodicity(compute_periodicity(audio, opts), opts);
}

}  // namespace dysfluency
