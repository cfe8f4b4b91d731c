#include "dysfluency/audio.hpp"
#include "dysfluency/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace dysfluency {

namespace {

constexpr double kKaiserBeta = 8.0;
constexpr int kHalfTaps = 32;  // per side, counted at the lower of the two rates
constexpr double kRolloff = 0.95;
constexpr std::int64_t kMaxPhases = 16384;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = std::numbers::pi * x;
    return std::sin(px) / px;
}

double kaiser(double x, double half_width) {
    const double r = x / half_width;
    if (std::abs(r) > 1.0) return 0.0;
    static const double norm = std::cyl_bessel_i(0.0, kKaiserBeta);
    return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / norm;
}

}  // namespace

AudioBuffer resample(const AudioBuffer& audio, int target_hz) {
    if (target_hz <= 0) throw std::invalid_argument("resample: target rate must be > 0");
    if (audio.sample_rate <= 0) throw std::invalid_argument("resample: source rate must be > 0");
    if (audio.sample_rate == target_hz) return audio;

    const std::int64_t g = std::gcd<std::int64_t>(audio.sample_rate, target_hz);
    const std::int64_t up = target_hz / g;
    const std::int64_t down = audio.sample_rate / g;
    if (up > kMaxPhases) throw std::invalid_argument("resample: rate ratio needs too many polyphase branches");

    // Kernel in units of input samples.
    const double cutoff = std::min(1.0, static_cast<double>(up) / static_cast<double>(down)) * kRolloff;
    const double half_width = kHalfTaps / std::min(1.0, static_cast<double>(up) / static_cast<double>(down));
    const auto reach = static_cast<std::int64_t>(std::ceil(half_width));
    const std::int64_t taps = 2 * reach + 1;

    // table[p][j] weights input sample q - reach + j for output phase p/up past q.
    std::vector<double> table(static_cast<std::size_t>(up * taps));
    for (std::int64_t p = 0; p < up; ++p) {
        const double frac = static_cast<double>(p) / static_cast<double>(up);
        double* row = table.data() + p * taps;
        double sum = 0.0;
        for (std::int64_t j = 0; j < taps; ++j) {
            const double t = frac + static_cast<double>(reach - j);
            row[j] = cutoff * sinc(cutoff * t) * kaiser(t, half_width);
            sum += row[j];
        }
        for (std::int64_t j = 0; j < taps; ++j) row[j] /= sum;
    }

    const auto n_in = static_cast<std::int64_t>(audio.samples.size());
    const std::int64_t n_out = n_in * up / down;
    AudioBuffer out;
    out.sample_rate = target_hz;
    out.samples.resize(static_cast<std::size_t>(n_out));
    const double* x = audio.samples.data();
    for (std::int64_t n = 0; n < n_out; ++n) {
        const std::int64_t pos = n * down;
        const std::int64_t q = pos / up;
        const std::int64_t p = pos % up;
        const double* row = table.data() + p * taps;
        const std::int64_t first = q - reach;
        const std::int64_t j0 = std::max<std::int64_t>(0, -first);
        const std::int64_t j1 = std::min<std::int64_t>(taps, n_in - first);
        double acc = 0.0;
        for (std::int64_t j = j0; j < j1; ++j) acc += row[j] * x[first + j];
        out.samples[static_cast<std::size_t>(n)] = std::clamp(acc, -1.0, 1.0);
    }
    return out;
}

}  // namespace dysfluency
