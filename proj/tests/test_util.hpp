#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "image.hpp"

namespace testutil {

inline fqa::GrayImage random_image(int width, int height, uint64_t seed, double lo = 0.0,
                                   double hi = 255.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> data(static_cast<size_t>(width) * height);
    for (double& v : data) v = dist(rng);
    return fqa::GrayImage(width, height, std::move(data));
}

inline fqa::GrayImage constant_image(int width, int height, double value) {
    return fqa::GrayImage(width, height,
                          std::vector<double>(static_cast<size_t>(width) * height, value));
}

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("freqiqa_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
