#include "image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <utility>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "error.hpp"

namespace fqa {

GrayImage::GrayImage(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width_ < kBlockSize || height_ < kBlockSize) {
        throw DataError("image dimensions " + std::to_string(width_) + "x" +
                        std::to_string(height_) + " are below the 8x8 block size");
    }
    if (data_.size() != static_cast<size_t>(width_) * height_) {
        throw DataError("image buffer size does not match dimensions");
    }
    for (double v : data_) {
        if (!std::isfinite(v)) throw DataError("image contains non-finite samples");
    }
}

double luma601(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

GrayImage load_gray(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty()) {
        throw DataError("cannot read image: " + path);
    }
    if (m.depth() != CV_8U) {
        throw DataError("unsupported sample depth (expected 8-bit): " + path);
    }
    const int w = m.cols, h = m.rows;
    if (w < kBlockSize || h < kBlockSize) {
        throw DataError("image " + path + " is " + std::to_string(w) + "x" +
                        std::to_string(h) + ", below the 8x8 block size");
    }
    std::vector<double> data(static_cast<size_t>(w) * h);
    switch (m.channels()) {
        case 1:
            for (int r = 0; r < h; ++r) {
                const uint8_t* row = m.ptr<uint8_t>(r);
                for (int c = 0; c < w; ++c) data[static_cast<size_t>(r) * w + c] = row[c];
            }
            break;
        case 3:
        case 4: {
            // OpenCV decodes as BGR(A).
            const int ch = m.channels();
            for (int r = 0; r < h; ++r) {
                const uint8_t* row = m.ptr<uint8_t>(r);
                for (int c = 0; c < w; ++c) {
                    const uint8_t* px = row + static_cast<size_t>(c) * ch;
                    data[static_cast<size_t>(r) * w + c] = luma601(px[2], px[1], px[0]);
                }
            }
            break;
        }
        default:
            throw DataError("unsupported channel count (" + std::to_string(m.channels()) +
                            "): " + path);
    }
    return GrayImage(w, h, std::move(data));
}

void save_png(const GrayImage& img, const std::string& path) {
    cv::Mat m(img.height(), img.width(), CV_8UC1);
    for (int r = 0; r < img.height(); ++r) {
        uint8_t* row = m.ptr<uint8_t>(r);
        for (int c = 0; c < img.width(); ++c) {
            double v = std::round(img.at(r, c));
            if (v < 0.0) v = 0.0;
            if (v > 255.0) v = 255.0;
            row[c] = static_cast<uint8_t>(v);
        }
    }
    if (!cv::imwrite(path, m)) {
        throw DataError("cannot write image: " + path);
    }
}

void write_float_grid(const std::vector<double>& values, int width, int height,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    char buf[32];
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[static_cast<size_t>(r) * width + c]);
            out << buf << (c + 1 == width ? '\n' : ' ');
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace fqa
