#include "distort.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "error.hpp"
#include "mscn.hpp"
#include "seeding.hpp"

namespace fqa {

namespace {

double clamp255(double v) { return v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v); }

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[static_cast<size_t>(i + radius)] = v;
        total += v;
    }
    for (double& v : k) v /= total;
    return k;
}

// JPEG Annex-K luminance quantization table.
constexpr std::array<int, 64> kJpegLumaTable = {
    16, 11, 10, 16, 24,  40,  51,  61,
    12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,
    14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,
    24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99};

// Orthonormal DCT-II basis scaled to the JPEG convention:
// B[u][x] = c(u) cos((2x+1)u pi/16) / 2, c(0)=1/sqrt(2). B B' = I, so the
// inverse transform is the transpose.
const std::array<double, 64>& dct_basis() {
    static const std::array<double, 64> b = [] {
        std::array<double, 64> m;
        for (int u = 0; u < 8; ++u) {
            const double cu = (u == 0) ? 1.0 / std::numbers::sqrt2 : 1.0;
            for (int x = 0; x < 8; ++x) {
                m[static_cast<size_t>(u) * 8 + x] =
                    0.5 * cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
            }
        }
        return m;
    }();
    return b;
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma < 0.0) throw UsageError("gaussian_blur: sigma must be >= 0");
    if (sigma == 0.0) return img;
    const std::vector<double> k = gaussian_kernel(sigma);
    const int radius = static_cast<int>(k.size() / 2);
    const int w = img.width(), h = img.height();

    // Horizontal pass, then vertical.
    std::vector<double> tmp(static_cast<size_t>(w) * h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                acc += k[static_cast<size_t>(i + radius)] * img.at(r, mirror_index(c + i, w));
            }
            tmp[static_cast<size_t>(r) * w + c] = acc;
        }
    }
    std::vector<double> out(static_cast<size_t>(w) * h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                acc += k[static_cast<size_t>(i + radius)] *
                       tmp[static_cast<size_t>(mirror_index(r + i, h)) * w + c];
            }
            out[static_cast<size_t>(r) * w + c] = acc;
        }
    }
    return GrayImage(w, h, std::move(out));
}

GrayImage awgn(const GrayImage& img, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw UsageError("awgn: sigma must be >= 0");
    if (sigma == 0.0) return img;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<double> out(img.data());
    for (double& v : out) v = clamp255(v + noise(rng));
    return GrayImage(img.width(), img.height(), std::move(out));
}

GrayImage blocky(const GrayImage& img, double q) {
    if (q < 1.0) throw UsageError("blocky: quantization scale must be >= 1");
    const auto& b = dct_basis();
    const int w = img.width(), h = img.height();
    std::vector<double> out(img.data());  // remainder rows/cols pass through

    double s[64], t[64], coef[64];
    for (int br = 0; br + 8 <= h; br += 8) {
        for (int bc = 0; bc + 8 <= w; bc += 8) {
            for (int m = 0; m < 8; ++m) {
                for (int n = 0; n < 8; ++n) s[m * 8 + n] = img.at(br + m, bc + n);
            }
            // coef = B s B'
            for (int u = 0; u < 8; ++u) {
                for (int n = 0; n < 8; ++n) {
                    double acc = 0.0;
                    for (int m = 0; m < 8; ++m) acc += b[u * 8 + m] * s[m * 8 + n];
                    t[u * 8 + n] = acc;
                }
            }
            for (int u = 0; u < 8; ++u) {
                for (int v = 0; v < 8; ++v) {
                    double acc = 0.0;
                    for (int n = 0; n < 8; ++n) acc += t[u * 8 + n] * b[v * 8 + n];
                    coef[u * 8 + v] = acc;
                }
            }
            for (int i = 1; i < 64; ++i) {  // AC only; DC survives
                const double step = q * kJpegLumaTable[static_cast<size_t>(i)];
                coef[i] = std::round(coef[i] / step) * step;
            }
            // s = B' coef B
            for (int m = 0; m < 8; ++m) {
                for (int v = 0; v < 8; ++v) {
                    double acc = 0.0;
                    for (int u = 0; u < 8; ++u) acc += b[u * 8 + m] * coef[u * 8 + v];
                    t[m * 8 + v] = acc;
                }
            }
            for (int m = 0; m < 8; ++m) {
                for (int n = 0; n < 8; ++n) {
                    double acc = 0.0;
                    for (int v = 0; v < 8; ++v) acc += t[m * 8 + v] * b[v * 8 + n];
                    out[static_cast<size_t>(br + m) * w + (bc + n)] = clamp255(acc);
                }
            }
        }
    }
    return GrayImage(w, h, std::move(out));
}

GrayImage apply_distortion(const GrayImage& img, const DistortionSpec& spec) {
    switch (spec.kind) {
        case DistortKind::gblur: return gaussian_blur(img, spec.level);
        case DistortKind::awgn: return awgn(img, spec.level, spec.seed);
        case DistortKind::blocky: return blocky(img, spec.level);
    }
    throw UsageError("unknown distortion kind");
}

GrayImage synth_content(int width, int height, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<double> img(static_cast<size_t>(width) * height);

    // Smooth background: bilinear ramp between random corner levels.
    const double c00 = 40.0 + 160.0 * unit(rng), c01 = 40.0 + 160.0 * unit(rng);
    const double c10 = 40.0 + 160.0 * unit(rng), c11 = 40.0 + 160.0 * unit(rng);
    for (int r = 0; r < height; ++r) {
        const double fy = static_cast<double>(r) / (height - 1);
        for (int c = 0; c < width; ++c) {
            const double fx = static_cast<double>(c) / (width - 1);
            img[static_cast<size_t>(r) * width + c] =
                (1 - fy) * ((1 - fx) * c00 + fx * c01) + fy * ((1 - fx) * c10 + fx * c11);
        }
    }

    // Hard-edged shapes (step edges carry broadband energy).
    const int shapes = 6 + static_cast<int>(unit(rng) * 6);
    for (int sidx = 0; sidx < shapes; ++sidx) {
        const double cx = unit(rng) * width, cy = unit(rng) * height;
        const double ax = (0.04 + 0.18 * unit(rng)) * width;
        const double ay = (0.04 + 0.18 * unit(rng)) * height;
        const double level = 20.0 + 215.0 * unit(rng);
        const bool rect = unit(rng) < 0.4;
        const int r0 = std::max(0, static_cast<int>(cy - ay)), r1 = std::min(height, static_cast<int>(cy + ay) + 1);
        const int q0 = std::max(0, static_cast<int>(cx - ax)), q1 = std::min(width, static_cast<int>(cx + ax) + 1);
        for (int r = r0; r < r1; ++r) {
            for (int c = q0; c < q1; ++c) {
                const double dx = (c - cx) / ax, dy = (r - cy) / ay;
                const bool inside = rect ? (std::abs(dx) < 1.0 && std::abs(dy) < 1.0)
                                         : (dx * dx + dy * dy < 1.0);
                if (inside) {
                    double& px = img[static_cast<size_t>(r) * width + c];
                    px = 0.35 * px + 0.65 * level;
                }
            }
        }
    }

    // Two oriented gratings.
    for (int gidx = 0; gidx < 2; ++gidx) {
        const double angle = unit(rng) * std::numbers::pi;
        const double freq = 0.15 + 0.55 * unit(rng);  // cycles per pixel scale
        const double amp = 6.0 + 18.0 * unit(rng);
        const double kx = std::cos(angle) * freq, ky = std::sin(angle) * freq;
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                img[static_cast<size_t>(r) * width + c] +=
                    amp * std::sin(2.0 * std::numbers::pi * (kx * c + ky * r));
            }
        }
    }

    // Band-limited texture plus light pixel noise.
    std::vector<double> noise(img.size());
    for (double& v : noise) v = gauss(rng);
    const double tex_amp = 8.0 + 14.0 * unit(rng);
    GrayImage raw(width, height, std::vector<double>(noise.size(), 128.0));
    {
        std::vector<double> shifted(noise.size());
        for (size_t i = 0; i < noise.size(); ++i) shifted[i] = 128.0 + 40.0 * noise[i];
        raw = gaussian_blur(GrayImage(width, height, std::move(shifted)), 1.2);
    }
    for (size_t i = 0; i < img.size(); ++i) {
        img[i] += tex_amp * (raw.data()[i] - 128.0) / 40.0 + 2.0 * gauss(rng);
        img[i] = clamp255(img[i]);
    }
    return GrayImage(width, height, std::move(img));
}

namespace {

std::string kind_name(DistortKind k) {
    switch (k) {
        case DistortKind::gblur: return "gblur";
        case DistortKind::awgn: return "awgn";
        case DistortKind::blocky: return "blocky";
    }
    return "?";
}

Distortion kind_label(DistortKind k) {
    switch (k) {
        case DistortKind::gblur: return Distortion::gblur;
        case DistortKind::awgn: return Distortion::wn;
        case DistortKind::blocky: return Distortion::jpeg;
    }
    return Distortion::multiple;
}

}  // namespace

Manifest build_ladder(const std::vector<GrayImage>& contents,
                      const std::vector<DistortionSpec>& specs, const std::string& out_dir,
                      const std::string& manifest_name) {
    if (contents.empty() || specs.empty()) {
        throw UsageError("build_ladder: contents and specs must be nonempty");
    }
    std::filesystem::create_directories(out_dir);

    std::vector<DistortionSpec> ordered = specs;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const DistortionSpec& a, const DistortionSpec& b) {
                         return a.level < b.level;
                     });

    Manifest m;
    m.polarity = ScorePolarity::higher_is_worse;  // pseudo-DMOS
    for (size_t ci = 0; ci < contents.size(); ++ci) {
        const std::string content_id = "content" + std::to_string(ci);
        for (size_t li = 0; li < ordered.size(); ++li) {
            DistortionSpec spec = ordered[li];
            spec.seed = mix_seed(spec.seed, ci, li);
            const GrayImage distorted = apply_distortion(contents[ci], spec);
            char name[128];
            std::snprintf(name, sizeof(name), "%s_c%03zu_l%02zu.png",
                          kind_name(spec.kind).c_str(), ci, li);
            const std::string file = (std::filesystem::path(out_dir) / name).string();
            save_png(distorted, file);

            Sample s;
            s.image_path = file;
            s.subjective_score = ordered[li].level;
            s.distortion = ordered[li].level == 0.0 ? Distortion::pristine
                                                    : kind_label(spec.kind);
            s.content_id = content_id;
            m.samples.push_back(std::move(s));
        }
    }
    write_manifest(m, (std::filesystem::path(out_dir) / manifest_name).string());
    return m;
}

Manifest build_mixed_ladder(const std::vector<GrayImage>& contents,
                            const std::vector<double>& blur_levels,
                            const std::vector<double>& blocky_levels,
                            const std::vector<double>& awgn_levels, uint64_t seed,
                            const std::string& out_dir, const std::string& manifest_name) {
    if (contents.empty() || blur_levels.empty() || (blocky_levels.empty() && awgn_levels.empty())) {
        throw UsageError("build_mixed_ladder: need contents, blur levels and a second stage");
    }
    std::filesystem::create_directories(out_dir);

    const double blur_max = *std::max_element(blur_levels.begin(), blur_levels.end());
    const double blocky_max =
        blocky_levels.empty() ? 1.0 : *std::max_element(blocky_levels.begin(), blocky_levels.end());
    const double awgn_max =
        awgn_levels.empty() ? 1.0 : *std::max_element(awgn_levels.begin(), awgn_levels.end());

    Manifest m;
    m.polarity = ScorePolarity::higher_is_worse;
    for (size_t ci = 0; ci < contents.size(); ++ci) {
        const std::string content_id = "content" + std::to_string(ci);
        size_t combo = 0;
        auto emit = [&](const GrayImage& img, double severity, const char* tag) {
            char name[128];
            std::snprintf(name, sizeof(name), "mixed_c%03zu_k%02zu_%s.png", ci, combo, tag);
            const std::string file = (std::filesystem::path(out_dir) / name).string();
            save_png(img, file);
            Sample s;
            s.image_path = file;
            s.subjective_score = severity;
            s.distortion = Distortion::multiple;
            s.content_id = content_id;
            m.samples.push_back(std::move(s));
            ++combo;
        };
        for (double sb : blur_levels) {
            const GrayImage blurred = gaussian_blur(contents[ci], sb);
            for (double qb : blocky_levels) {
                emit(blocky(blurred, qb), sb / blur_max + qb / blocky_max, "bq");
            }
            for (double sn : awgn_levels) {
                emit(awgn(blurred, sn, mix_seed(seed, ci, combo)),
                     sb / blur_max + sn / awgn_max, "bn");
            }
        }
    }
    write_manifest(m, (std::filesystem::path(out_dir) / manifest_name).string());
    return m;
}

}  // namespace fqa
