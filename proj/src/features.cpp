#include "features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "mscn.hpp"

namespace fqa {

SumParameterSets sum_parameters(const std::vector<BlockSpectrum>& gray_spectra,
                                const std::vector<BlockSpectrum>& mscn_spectra,
                                const BandIndexMap& bands) {
    if (gray_spectra.empty() || mscn_spectra.empty()) {
        throw DataError("sum_parameters: empty spectra list");
    }
    if (gray_spectra.size() != mscn_spectra.size()) {
        throw DataError("sum_parameters: gray and MSCN tilings differ (" +
                        std::to_string(gray_spectra.size()) + " vs " +
                        std::to_string(mscn_spectra.size()) + " blocks)");
    }
    SumParameterSets sets;
    const size_t n = gray_spectra.size();
    sets.s_g_lf.resize(n);
    sets.s_g_hf.resize(n);
    sets.s_m_lf.resize(n);
    sets.s_m_hf.resize(n);
    for (size_t b = 0; b < n; ++b) {
        double g_lf = 0.0, g_hf = 0.0, m_lf = 0.0, m_hf = 0.0;
        for (size_t cell = 0; cell < 64; ++cell) {
            switch (bands.band[cell]) {
                case Band::LF:
                    g_lf += gray_spectra[b].mag[cell];
                    m_lf += mscn_spectra[b].mag[cell];
                    break;
                case Band::HF:
                    g_hf += gray_spectra[b].mag[cell];
                    m_hf += mscn_spectra[b].mag[cell];
                    break;
                default:  // DC and MF cells are excluded
                    break;
            }
        }
        sets.s_g_lf[b] = g_lf;
        sets.s_g_hf[b] = g_hf;
        sets.s_m_lf[b] = m_lf;
        sets.s_m_hf[b] = m_hf;
    }
    return sets;
}

SumParameterSets normalize(const SumParameterSets& sets, const NormalizationFactors& nf) {
    if (nf.g_lf <= 0.0 || nf.m_lf <= 0.0 || nf.g_hf <= 0.0 || nf.m_hf <= 0.0) {
        throw UsageError("normalization factors must be strictly positive");
    }
    SumParameterSets out = sets;
    for (double& v : out.s_g_lf) v /= nf.g_lf;
    for (double& v : out.s_g_hf) v /= nf.g_hf;
    for (double& v : out.s_m_lf) v /= nf.m_lf;
    for (double& v : out.s_m_hf) v /= nf.m_hf;
    return out;
}

namespace {

void bin_counts(const std::vector<double>& values, double eps, double* out5) {
    size_t counts[5] = {0, 0, 0, 0, 0};
    for (double v : values) {
        if (v <= eps) ++counts[0];
        else if (v <= 0.25) ++counts[1];
        else if (v <= 0.5) ++counts[2];
        else if (v <= 0.75) ++counts[3];
        else ++counts[4];  // values above 1 fold into the top bin
    }
    const double total = static_cast<double>(values.size());
    for (int i = 0; i < 5; ++i) out5[i] = static_cast<double>(counts[i]) / total;
}

double mean_of(const double* begin, size_t n) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += begin[i];
    return acc / static_cast<double>(n);
}

}  // namespace

std::array<double, 20> histogram_features(const SumParameterSets& normalized,
                                          double zero_epsilon) {
    if (normalized.block_count() == 0) throw DataError("histogram_features: no blocks");
    if (zero_epsilon < 0.0) throw UsageError("zero_epsilon must be >= 0");
    std::array<double, 20> f{};
    bin_counts(normalized.s_g_lf, zero_epsilon, f.data() + 0);
    bin_counts(normalized.s_m_lf, zero_epsilon, f.data() + 5);
    bin_counts(normalized.s_g_hf, zero_epsilon, f.data() + 10);
    bin_counts(normalized.s_m_hf, zero_epsilon, f.data() + 15);
    return f;
}

std::array<double, 4> extremal_means(const SumParameterSets& normalized) {
    const size_t blocks = normalized.block_count();
    if (blocks == 0) throw DataError("extremal_means: no blocks");
    const size_t k = std::min<size_t>(100, blocks);

    auto tails = [k](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const double bottom = mean_of(v.data(), k);
        const double top = mean_of(v.data() + (v.size() - k), k);
        return std::pair<double, double>(top, bottom);
    };
    const auto [g_top, g_bottom] = tails(normalized.s_g_hf);
    const auto [m_top, m_bottom] = tails(normalized.s_m_hf);
    return {g_top, m_top, g_bottom, m_bottom};
}

FeatureVector extract(const GrayImage& img, const ExtractOptions& opts) {
    const MscnField field = mscn(img);
    const std::vector<BlockSpectrum> gray_spectra = block_spectra(img);
    const std::vector<BlockSpectrum> mscn_spectra = block_spectra(field);
    SumParameterSets sums =
        normalize(sum_parameters(gray_spectra, mscn_spectra, manhattan_index()), opts.nf);

    // Zero detection: normalized sums at or below epsilon are zero-valued
    // (transform round-off never reaches exact zero on its own).
    auto snap = [eps = opts.zero_epsilon](std::vector<double>& v) {
        for (double& x : v) {
            if (x <= eps) x = 0.0;
        }
    };
    snap(sums.s_g_lf);
    snap(sums.s_g_hf);
    snap(sums.s_m_lf);
    snap(sums.s_m_hf);

    const std::array<double, 20> hist = histogram_features(sums, opts.zero_epsilon);
    const std::array<double, 4> tails = extremal_means(sums);

    FeatureVector f{};
    std::copy(hist.begin(), hist.end(), f.begin());
    std::copy(tails.begin(), tails.end(), f.begin() + 20);
    return f;
}

void write_feature_csv(const std::vector<FeatureRow>& rows, const std::string& path) {
    std::ostringstream out;
    out << "path";
    for (int i = 1; i <= kFeatureCount; ++i) out << ",f" << i;
    out << ",score\n";
    char buf[32];
    for (const auto& row : rows) {
        out << row.path;
        for (double v : row.features) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << ',';
        if (row.score) {
            std::snprintf(buf, sizeof(buf), "%.17g", *row.score);
            out << buf;
        }
        out << '\n';
    }
    std::ofstream file(path);
    if (!file) throw DataError("cannot write feature CSV: " + path);
    file << out.str();
    if (!file) throw DataError("write failed: " + path);
}

std::vector<FeatureRow> read_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open feature CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty feature CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::string expected = "path";
    for (int i = 1; i <= kFeatureCount; ++i) expected += ",f" + std::to_string(i);
    const bool with_score = (line == expected + ",score");
    if (!with_score && line != expected) {
        throw DataError("feature CSV " + path +
                        ": header does not match layout " + kFeatureLayout);
    }

    std::vector<FeatureRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') { fields.push_back(cur); cur.clear(); }
            else cur.push_back(ch);
        }
        fields.push_back(cur);
        const size_t want = 1 + kFeatureCount + (with_score ? 1 : 0);
        if (fields.size() != want) {
            throw DataError("feature CSV " + path + " line " + std::to_string(lineno) +
                            ": expected " + std::to_string(want) + " columns");
        }
        FeatureRow row;
        row.path = fields[0];
        try {
            for (int i = 0; i < kFeatureCount; ++i) row.features[i] = std::stod(fields[1 + i]);
            if (with_score && !fields[1 + kFeatureCount].empty()) {
                row.score = std::stod(fields[1 + kFeatureCount]);
            }
        } catch (const std::exception&) {
            throw DataError("feature CSV " + path + " line " + std::to_string(lineno) +
                            ": non-numeric value");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace fqa
