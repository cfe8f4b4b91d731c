#include "dysfluency/detectors.hpp"

#include "dysfluency/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dysfluency {

namespace {

constexpr double kCyclePeak = 0.5;
constexpr double kCycleProminence = 0.2;
constexpr std::size_t kCycleMinOverlap = 4;
constexpr double kLagGuard = 0.9;
constexpr std::size_t kMinPeriodFrames = 3;

// Pearson correlation of x[0, n-lag) against x[lag, n); 0 when either part
// is flat.
double lagged_correlation(std::span<const double> x, std::size_t lag) {
    if (lag >= x.size()) return 0.0;
    const std::size_t m = x.size() - lag;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        ma += x[i];
        mb += x[i + lag];
    }
    ma /= static_cast<double>(m);
    mb /= static_cast<double>(m);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double a = x[i] - ma, b = x[i + lag] - mb;
        sab += a * b;
        saa += a * a;
        sbb += b * b;
    }
    const double scale = 1e-12 * static_cast<double>(m) * (1.0 + ma * ma + mb * mb);
    if (saa <= scale || sbb <= scale) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

std::vector<double> clamped_energy(const FeatureSet& fs, std::size_t begin, std::size_t end) {
    std::vector<double> e(end - begin);
    for (std::size_t i = begin; i < end; ++i) e[i - begin] = std::max(fs.energy[i], fs.silence_threshold_db);
    return e;
}

}  // namespace

std::size_t count_cycles(std::span<const double> energy_db) {
    const std::size_t n = energy_db.size();
    if (n < kCycleMinOverlap + 3) return 0;
    const std::size_t max_lag = n - kCycleMinOverlap;
    std::vector<double> r(max_lag + 2, -1.0);
    // Unbiased ACF about the window mean, normalized by the window variance.
    double mean = 0.0;
    for (double v : energy_db) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : energy_db) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    if (var <= 1e-12 * (1.0 + mean * mean)) return 0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) acc += (energy_db[i] - mean) * (energy_db[i + lag] - mean);
        r[lag] = acc / static_cast<double>(n - lag) / var;
    }
    // Ripples on a slowly decaying ACF (a single onset or offset) are not cycles.
    // A side with no lags left (the last lag) does not bound the base.
    const auto prominence = [&](std::size_t p) {
        double left = r[p], right = r[p];
        for (std::size_t k = p; k-- > 1 && r[k] <= r[p];) left = std::min(left, r[k]);
        for (std::size_t k = p + 1; k <= max_lag && r[k] <= r[p]; ++k) right = std::min(right, r[k]);
        const double base = p == max_lag ? left : std::max(left, right);
        return r[p] - base;
    };
    std::size_t peaks = 0;
    for (std::size_t lag = 2; lag <= max_lag; ++lag) {
        if (r[lag] > kCyclePeak && r[lag] > r[lag - 1] && r[lag] >= r[lag + 1] && prominence(lag) >= kCycleProminence) {
            ++peaks;
        }
    }
    return peaks;
}

RepetitionScore repetition_score(const FeatureSet& fs, double t_s, const RuleConfig& cfg) {
    const std::size_t n = fs.frame_count();
    const double hop = fs.energy.hop_s;
    const double end_s = fs.energy.time(n == 0 ? 0 : n - 1) + fs.energy.window_s / 2.0;
    if (n == 0 || t_s < 0.0 || t_s > end_s) {
        throw std::out_of_range("repetition_score: time " + std::to_string(t_s) + " s lies outside the recording");
    }
    const auto center = static_cast<std::ptrdiff_t>(std::lround((t_s - fs.energy.start_s) / hop));
    const auto half = static_cast<std::ptrdiff_t>(std::lround(cfg.acf_window_s / 2.0 / hop));
    const auto begin = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(center - half, 0, static_cast<std::ptrdiff_t>(n)));
    const auto end = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(center + half + 1, 0, static_cast<std::ptrdiff_t>(n)));

    const auto energy = clamped_energy(fs, begin, end);
    const std::span<const double> flux(fs.flux.values.data() + begin, end - begin);
    const std::span<const double> centroid(fs.centroid.values.data() + begin, end - begin);

    const auto lag_min = static_cast<std::size_t>(std::max<long>(1, std::lround(cfg.acf_lag_min_s / hop)));
    const auto lag_max = static_cast<std::size_t>(std::lround(cfg.acf_lag_max_s / hop));
    const std::size_t len = end - begin;
    std::vector<double> r;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
        if (lag + 3 > len) {
            r.push_back(0.0);
            continue;
        }
        r.push_back(cfg.acf_weight_energy * lagged_correlation(energy, lag) +
                    cfg.acf_weight_flux * lagged_correlation(flux, lag) +
                    cfg.acf_weight_centroid * lagged_correlation(centroid, lag));
    }
    RepetitionScore out;
    if (r.empty()) return out;
    const auto best = std::max_element(r.begin(), r.end());
    out.score = std::max(0.0, *best);
    std::size_t pick = static_cast<std::size_t>(best - r.begin());
    if (*best > 0.0) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            const bool left = k == 0 || r[k] >= r[k - 1];
            const bool right = k + 1 == r.size() || r[k] >= r[k + 1];
            if (left && right && r[k] >= kLagGuard * *best) {
                pick = k;
                break;
            }
        }
    }
    out.lag_s = static_cast<double>(lag_min + pick) * hop;
    return out;
}

std::vector<DysfluencyEvent> detect_sound_repetitions(const FeatureSet& fs, const RuleConfig& cfg) {
    std::vector<DysfluencyEvent> out;
    const std::size_t n = fs.frame_count();
    const auto w = static_cast<std::size_t>(cfg.dtw_window_frames);
    const std::size_t half = w / 2;
    const double hop = fs.energy.hop_s;
    std::size_t i = 0;
    while (i + w <= n) {
        // Windows that are mostly silence cannot hold a repetition.
        std::size_t voiced = 0;
        for (std::size_t k = i; k < i + w; ++k) voiced += fs.is_silent(k) ? 0 : 1;
        if (voiced * 2 < w) {
            ++i;
            continue;
        }
        const DtwResult d = segment_dtw(fs, {i, i + half}, {i + half, i + w});
        const double cost = d.normalized();
        if (!(cost < cfg.theta_dtw)) {
            ++i;
            continue;
        }
        const auto energy = clamped_energy(fs, i, i + w);
        const auto [lo, hi] = std::minmax_element(energy.begin(), energy.end());
        const double modulation = *hi - *lo;
        const std::size_t cycles = modulation >= cfg.rep_min_modulation_db ? count_cycles(energy) : 0;
        if (cycles < static_cast<std::size_t>(cfg.rep_min_cycles)) {
            ++i;
            continue;
        }

        const double start = fs.energy.time(i) - fs.energy.hop_s / 2.0;
        const double end = fs.energy.time(i + w - 1) + fs.energy.hop_s / 2.0;
        const RepetitionScore rs = repetition_score(fs, 0.5 * (start + end), cfg);
        if (!(rs.score > cfg.theta_r)) {
            ++i;
            continue;
        }

        // Grow the span one repetition period at a time while neighbouring
        // periods still match.
        std::size_t first = i, last = i + w;
        const auto period = static_cast<std::size_t>(std::lround(rs.lag_s / hop));
        const auto repeats = [&](std::size_t a, std::size_t b) {
            std::size_t voiced = 0;
            for (std::size_t k = a; k < b + period; ++k) voiced += fs.is_silent(k) ? 0 : 1;
            return voiced >= period && segment_dtw(fs, {a, b}, {b, b + period}).normalized() < cfg.theta_dtw;
        };
        if (period >= kMinPeriodFrames) {
            while (first >= period && repeats(first - period, first)) first -= period;
            while (last + period <= n && repeats(last - period, last)) last += period;
        }

        DysfluencyEvent ev;
        ev.kind = EventKind::SoundRep;
        ev.start_s = fs.energy.time(first) - hop / 2.0;
        ev.end_s = fs.energy.time(last - 1) + hop / 2.0;
        ev.confidence = std::clamp(rs.score / cfg.theta_r - 0.5, 0.0, 1.0);
        auto& e = ev.evidence;
        e.set("dtw_cost", cost);
        e.set("path_length", static_cast<double>(d.path_length));
        e.set("window_frames", static_cast<double>(w));
        e.set("cycle_count", static_cast<double>(cycles));
        e.set("modulation_db", modulation);
        e.set("repetition_score", rs.score);
        e.set("acf_lag_s", rs.lag_s);
        e.set("span_frames", static_cast<double>(last - first));
        out.push_back(std::move(ev));
        i = last;
    }
    return out;
}

}  // namespace dysfluency
