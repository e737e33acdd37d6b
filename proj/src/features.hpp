#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "blockfreq.hpp"
#include "image.hpp"

namespace fqa {

inline constexpr int kFeatureCount = 24;
inline constexpr const char* kFeatureLayout = "freqiqa-f24-v1";

using FeatureVector = std::array<double, kFeatureCount>;

// Per-block sums of shifted-DFT magnitudes over the LF (index 1..3) and HF
// (index 5..8) bands, for the gray image and its MSCN field. All four lists
// share the block raster order.
struct SumParameterSets {
    std::vector<double> s_g_lf;
    std::vector<double> s_g_hf;
    std::vector<double> s_m_lf;
    std::vector<double> s_m_hf;

    size_t block_count() const { return s_g_lf.size(); }
};

struct NormalizationFactors {
    double g_lf = 1000.0;
    double m_lf = 100.0;
    double g_hf = 100.0;
    double m_hf = 20.0;
};

struct ExtractOptions {
    NormalizationFactors nf;
    double zero_epsilon = 1e-6;
};

SumParameterSets sum_parameters(const std::vector<BlockSpectrum>& gray_spectra,
                                const std::vector<BlockSpectrum>& mscn_spectra,
                                const BandIndexMap& bands);

SumParameterSets normalize(const SumParameterSets& sets, const NormalizationFactors& nf);

// f1..f20: per sum-parameter set, the fraction of blocks in five bins
// {<= eps, (eps,.25], (.25,.5], (.5,.75], (.75,inf)}.
std::array<double, 20> histogram_features(const SumParameterSets& normalized,
                                          double zero_epsilon);

// f21..f24: means of the min(100, B) largest / smallest normalized HF sums.
std::array<double, 4> extremal_means(const SumParameterSets& normalized);

// Full pipeline: MSCN, blockwise spectra of both fields, sum parameters,
// normalization, histogram and extremal-mean features.
FeatureVector extract(const GrayImage& img, const ExtractOptions& opts = {});

// Feature CSV: header `path,f1,...,f24,score` (score column optional).
struct FeatureRow {
    std::string path;
    FeatureVector features{};
    std::optional<double> score;
};

void write_feature_csv(const std::vector<FeatureRow>& rows, const std::string& path);
std::vector<FeatureRow> read_feature_csv(const std::string& path);

}  // namespace fqa
