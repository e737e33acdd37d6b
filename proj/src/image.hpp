#pragma once

#include <string>
#include <vector>

namespace fqa {

inline constexpr int kBlockSize = 8;

// Row-major grayscale field with real-valued luminance samples, nominal
// range [0,255]. Validated on construction: at least one full 8x8 block
// and every sample finite.
class GrayImage {
public:
    GrayImage(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    const std::vector<double>& data() const { return data_; }

    double at(int row, int col) const { return data_[static_cast<size_t>(row) * width_ + col]; }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

// BT.601 luma of one RGB triple, values in [0,255].
double luma601(double r, double g, double b);

// Decodes an 8-bit raster image (PNG/JPEG/BMP/PGM/...). Multi-channel
// inputs are reduced with BT.601 luma; single-channel inputs pass through.
GrayImage load_gray(const std::string& path);

// Writes the image as 8-bit PNG, samples rounded and clamped to [0,255].
void save_png(const GrayImage& img, const std::string& path);

// Debug dump: one ASCII row of floats per image row.
void write_float_grid(const std::vector<double>& values, int width, int height,
                      const std::string& path);

}  // namespace fqa
