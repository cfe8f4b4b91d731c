#include "dysfluency/dtw.hpp"

#include <cmath>

namespace dysfluency {

namespace {

double distance(std::span<const double> a, std::span<const double> b, std::size_t dims) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

DtwResult dtw_euclidean(const FrameSeries& a, const FrameSeries& b, std::size_t dims) {
    return dtw(a.size(), b.size(), [&](std::size_t i, std::size_t j) { return distance(a.row(i), b.row(j), dims); });
}

DtwResult segment_dtw(const FeatureSet& fs, FrameRange a, FrameRange b) {
    const auto& mfcc = fs.mfcc;
    const std::size_t dims = std::min(kMfccStatic, mfcc.dim);

    double norm_sum = 0.0;
    std::size_t counted = 0;
    for (const FrameRange& r : {a, b}) {
        for (std::size_t i = r.begin; i < r.end; ++i) {
            if (fs.is_silent(i)) continue;
            const auto row = mfcc.row(i);
            double acc = 0.0;
            for (std::size_t k = 0; k < dims; ++k) acc += row[k] * row[k];
            norm_sum += std::sqrt(acc);
            ++counted;
        }
    }
    const double scale = counted > 0 ? norm_sum / static_cast<double>(counted) : 0.0;

    return dtw(a.size(), b.size(), [&](std::size_t i, std::size_t j) {
        const std::size_t fi = a.begin + i, fj = b.begin + j;
        if (scale <= 0.0 || fs.is_silent(fi) || fs.is_silent(fj)) return 1.0;
        return distance(mfcc.row(fi), mfcc.row(fj), dims) / scale;
    });
}

}  // namespace dysfluency
