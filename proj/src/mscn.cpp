#include "mscn.hpp"

#include <cmath>

namespace fqa {

GaussianWindow gaussian_window() {
    constexpr double sigma = 7.0 / 6.0;
    GaussianWindow win;
    double total = 0.0;
    for (int k = -GaussianWindow::kHalf; k <= GaussianWindow::kHalf; ++k) {
        for (int l = -GaussianWindow::kHalf; l <= GaussianWindow::kHalf; ++l) {
            double v = std::exp(-(k * k + l * l) / (2.0 * sigma * sigma));
            win.w[static_cast<size_t>(k + GaussianWindow::kHalf) * GaussianWindow::kSize +
                  (l + GaussianWindow::kHalf)] = v;
            total += v;
        }
    }
    for (double& v : win.w) v /= total;
    return win;
}

std::vector<double> local_mean(const GrayImage& img, const GaussianWindow& w) {
    const int width = img.width(), height = img.height();
    std::vector<double> mean(static_cast<size_t>(width) * height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double acc = 0.0;
            for (int k = -GaussianWindow::kHalf; k <= GaussianWindow::kHalf; ++k) {
                const int rr = mirror_index(r + k, height);
                for (int l = -GaussianWindow::kHalf; l <= GaussianWindow::kHalf; ++l) {
                    const int cc = mirror_index(c + l, width);
                    acc += w.at(k, l) * img.at(rr, cc);
                }
            }
            mean[static_cast<size_t>(r) * width + c] = acc;
        }
    }
    return mean;
}

std::vector<double> local_sigma(const GrayImage& img, const GaussianWindow& w,
                                const std::vector<double>& mean_field) {
    const int width = img.width(), height = img.height();
    std::vector<double> sigma(static_cast<size_t>(width) * height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double mu = mean_field[static_cast<size_t>(r) * width + c];
            double acc = 0.0;
            for (int k = -GaussianWindow::kHalf; k <= GaussianWindow::kHalf; ++k) {
                const int rr = mirror_index(r + k, height);
                for (int l = -GaussianWindow::kHalf; l <= GaussianWindow::kHalf; ++l) {
                    const int cc = mirror_index(c + l, width);
                    const double d = img.at(rr, cc) - mu;
                    acc += w.at(k, l) * d * d;
                }
            }
            sigma[static_cast<size_t>(r) * width + c] = std::sqrt(acc < 0.0 ? 0.0 : acc);
        }
    }
    return sigma;
}

MscnField mscn(const GrayImage& img) {
    const GaussianWindow win = gaussian_window();
    const int width = img.width(), height = img.height();

    MscnField field;
    field.width = width;
    field.height = height;
    field.values.resize(static_cast<size_t>(width) * height);

    // The mean is accumulated as deviations around the center pixel,
    // mu = I + sum w (I_kl - I): constant fields then give exactly zero.
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const double center = img.at(r, c);
            double delta = 0.0;
            for (int k = -GaussianWindow::kHalf; k <= GaussianWindow::kHalf; ++k) {
                const int rr = mirror_index(r + k, height);
                for (int l = -GaussianWindow::kHalf; l <= GaussianWindow::kHalf; ++l) {
                    const int cc = mirror_index(c + l, width);
                    delta += win.at(k, l) * (img.at(rr, cc) - center);
                }
            }
            const double mu = center + delta;
            double var = 0.0;
            for (int k = -GaussianWindow::kHalf; k <= GaussianWindow::kHalf; ++k) {
                const int rr = mirror_index(r + k, height);
                for (int l = -GaussianWindow::kHalf; l <= GaussianWindow::kHalf; ++l) {
                    const int cc = mirror_index(c + l, width);
                    const double d = img.at(rr, cc) - mu;
                    var += win.at(k, l) * d * d;
                }
            }
            const double sigma = std::sqrt(var < 0.0 ? 0.0 : var);
            field.values[static_cast<size_t>(r) * width + c] = -delta / (sigma + 1.0);
        }
    }
    return field;
}

}  // namespace fqa
