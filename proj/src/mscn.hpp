#pragma once

#include <array>
#include <vector>

#include "image.hpp"

namespace fqa {

// 7x7 Gaussian weighting window (half extent K=L=3), sampled at sigma 7/6
// and rescaled to unit volume.
struct GaussianWindow {
    static constexpr int kHalf = 3;
    static constexpr int kSize = 2 * kHalf + 1;
    std::array<double, kSize * kSize> w{};

    double at(int k, int l) const {  // k,l in [-3,3]
        return w[static_cast<size_t>(k + kHalf) * kSize + (l + kHalf)];
    }
};

GaussianWindow gaussian_window();

// Per-pixel mean-subtracted contrast-normalized coefficients,
// (I - mu) / (sigma + 1). Same dimensions as the source image.
struct MscnField {
    int width = 0;
    int height = 0;
    std::vector<double> values;

    double at(int row, int col) const { return values[static_cast<size_t>(row) * width + col]; }
};

// Half-sample symmetric mirror index: ..., I(1), I(0) | I(0), I(1), ...
inline int mirror_index(int t, int n) {
    if (t < 0) t = -t - 1;
    if (t >= n) t = 2 * n - 1 - t;
    return t;
}

// Weighted local mean field (mirror borders).
std::vector<double> local_mean(const GrayImage& img, const GaussianWindow& w);

// Weighted local standard deviation field; tiny negative round-off under
// the square root is clamped to zero.
std::vector<double> local_sigma(const GrayImage& img, const GaussianWindow& w,
                                const std::vector<double>& mean_field);

MscnField mscn(const GrayImage& img);

}  // namespace fqa
