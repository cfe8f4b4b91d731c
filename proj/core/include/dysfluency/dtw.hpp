#pragma once

#include "dysfluency/features.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace dysfluency {

struct DtwResult {
    double total_cost = 0.0;
    std::size_t path_length = 0;

    double normalized() const noexcept {
        return path_length == 0 ? 0.0 : total_cost / static_cast<double>(path_length);
    }
};

/// Classic DTW with steps (1,0), (0,1), (1,1). Among equal-cost paths the
/// shortest wins, so the normalized cost is well defined.
template <class LocalCost>
DtwResult dtw(std::size_t n, std::size_t m, LocalCost&& local) {
    if (n == 0 || m == 0) return {};
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cost((n + 1) * (m + 1), inf);
    std::vector<std::size_t> len((n + 1) * (m + 1), 0);
    const auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
    cost[at(0, 0)] = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            std::size_t from = at(i - 1, j - 1);
            for (std::size_t cand : {at(i - 1, j), at(i, j - 1)}) {
                if (cost[cand] < cost[from] || (cost[cand] == cost[from] && len[cand] < len[from])) from = cand;
            }
            cost[at(i, j)] = cost[from] + local(i - 1, j - 1);
            len[at(i, j)] = len[from] + 1;
        }
    }
    return {cost[at(n, m)], len[at(n, m)]};
}

/// Plain Euclidean DTW between the rows of two matrices (first `dims` columns).
DtwResult dtw_euclidean(const FrameSeries& a, const FrameSeries& b, std::size_t dims = kMfccStatic);

struct FrameRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    std::size_t size() const noexcept { return end - begin; }
};

/// Normalized DTW over the static MFCC of two frame ranges of one recording:
/// local cost is the Euclidean distance divided by the mean static-frame norm
/// of both ranges; any pair involving a silent frame costs exactly 1.
DtwResult segment_dtw(const FeatureSet& fs, FrameRange a, FrameRange b);

}  // namespace dysfluency
