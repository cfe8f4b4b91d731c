#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dysfluency {

// One framing contract for every track: 25 ms window, 10 ms hop at 16 kHz,
// final partial frame dropped.
inline constexpr int kCanonicalSampleRate = 16000;
inline constexpr std::size_t kWindowSamples = 400;
inline constexpr std::size_t kHopSamples = 160;
inline constexpr double kWindowSeconds = 0.025;
inline constexpr double kHopSeconds = 0.010;

/// floor((n - 400) / 160) + 1, or 0 when n is shorter than one window.
constexpr std::size_t frame_count(std::size_t n_samples) noexcept {
    return n_samples < kWindowSamples ? 0 : (n_samples - kWindowSamples) / kHopSamples + 1;
}

constexpr double frame_start_s(std::size_t i) noexcept { return static_cast<double>(i) * kHopSeconds; }
constexpr double frame_center_s(std::size_t i) noexcept { return frame_start_s(i) + kWindowSeconds / 2.0; }

/// Time-indexed per-frame values. Scalar tracks have dim == 1; vector tracks
/// (MFCC) store rows contiguously.
struct FrameSeries {
    std::vector<double> values;
    std::size_t dim = 1;
    double hop_s = kHopSeconds;
    double window_s = kWindowSeconds;
    double start_s = kWindowSeconds / 2.0;  // center of frame 0

    std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
    bool empty() const noexcept { return values.empty(); }
    double time(std::size_t i) const noexcept { return start_s + static_cast<double>(i) * hop_s; }

    double operator[](std::size_t i) const noexcept { return values[i * dim]; }
    double& operator[](std::size_t i) noexcept { return values[i * dim]; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values.data() + i * dim, dim};
    }
    std::span<double> row(std::size_t i) noexcept { return {values.data() + i * dim, dim}; }

    static FrameSeries scalar(std::size_t frames, double fill = 0.0) {
        FrameSeries s;
        s.values.assign(frames, fill);
        return s;
    }
    static FrameSeries matrix(std::size_t frames, std::size_t dim) {
        FrameSeries s;
        s.dim = dim;
        s.values.assign(frames * dim, 0.0);
        return s;
    }
};

}  // namespace dysfluency
