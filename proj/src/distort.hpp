#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "image.hpp"
#include "manifest.hpp"

namespace fqa {

enum class DistortKind { gblur, awgn, blocky };

struct DistortionSpec {
    DistortKind kind = DistortKind::gblur;
    double level = 0.0;       // sigma in pixels (gblur), sigma in gray levels
                              // (awgn), quantization scale q >= 1 (blocky)
    uint64_t seed = 0;        // awgn only
};

// Separable Gaussian convolution, kernel truncated at +-ceil(3*sigma),
// mirror boundaries; sigma=0 is the identity.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

// Adds i.i.d. zero-mean Gaussian noise and clamps to [0,255].
GrayImage awgn(const GrayImage& img, double sigma, uint64_t seed);

// JPEG-like 8x8 block quantization: per block, forward DCT, AC coefficients
// divided by the Annex-K luminance table scaled by q and rounded, inverse
// DCT, clamp. The DC term passes through so flat regions keep their level.
GrayImage blocky(const GrayImage& img, double q);

GrayImage apply_distortion(const GrayImage& img, const DistortionSpec& spec);

// Deterministic pseudo-natural test content: smooth background, random
// shapes, gratings and band-limited texture. Values in [0,255].
GrayImage synth_content(int width, int height, uint64_t seed);

// Writes one distorted image per (content, spec) pair plus a manifest whose
// score is the distortion level (pseudo-DMOS, higher = worse). Levels are
// emitted in ascending order per content.
Manifest build_ladder(const std::vector<GrayImage>& contents,
                      const std::vector<DistortionSpec>& specs,
                      const std::string& out_dir,
                      const std::string& manifest_name = "manifest.csv");

// Two-stage ladder mixing blur->blocky and blur->awgn combinations; the
// score is the severity index: sum of each stage's level divided by the
// largest level of its kind in the ladder.
Manifest build_mixed_ladder(const std::vector<GrayImage>& contents,
                            const std::vector<double>& blur_levels,
                            const std::vector<double>& blocky_levels,
                            const std::vector<double>& awgn_levels,
                            uint64_t seed, const std::string& out_dir,
                            const std::string& manifest_name = "manifest.csv");

}  // namespace fqa
