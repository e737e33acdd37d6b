#include "blockfreq.hpp"

#include <cmath>
#include <numbers>

namespace fqa {

namespace {

// Twiddle matrix W[k][m] = exp(-2*pi*i*k*m/8); the 2-D transform is
// F = W * block * W^T.
const std::array<Complex, 64>& twiddle8() {
    static const std::array<Complex, 64> w = [] {
        std::array<Complex, 64> t;
        for (int k = 0; k < 8; ++k) {
            for (int m = 0; m < 8; ++m) {
                const double phase = -2.0 * std::numbers::pi * k * m / 8.0;
                t[static_cast<size_t>(k) * 8 + m] = Complex(std::cos(phase), std::sin(phase));
            }
        }
        return t;
    }();
    return w;
}

}  // namespace

const BandIndexMap& manhattan_index() {
    static const BandIndexMap map = [] {
        BandIndexMap m;
        constexpr int u0 = 4, v0 = 4;
        for (int u = 0; u < 8; ++u) {
            for (int v = 0; v < 8; ++v) {
                const int i = std::abs(u0 - u) + std::abs(v0 - v);
                const size_t cell = static_cast<size_t>(u) * 8 + v;
                m.index[cell] = i;
                if (i == 0) m.band[cell] = Band::DC;
                else if (i <= 3) m.band[cell] = Band::LF;
                else if (i == 4) m.band[cell] = Band::MF;
                else m.band[cell] = Band::HF;
            }
        }
        return m;
    }();
    return map;
}

ComplexGrid8 dft8x8(const RealGrid8& block) {
    const auto& w = twiddle8();
    // Rows first: G[u][n] = sum_m W[u][m] * block[m][n].
    std::array<Complex, 64> g;
    for (int u = 0; u < 8; ++u) {
        for (int n = 0; n < 8; ++n) {
            Complex acc = 0.0;
            for (int m = 0; m < 8; ++m) {
                acc += w[static_cast<size_t>(u) * 8 + m] * block[static_cast<size_t>(m) * 8 + n];
            }
            g[static_cast<size_t>(u) * 8 + n] = acc;
        }
    }
    // Columns: F[u][v] = sum_n G[u][n] * W[v][n].
    ComplexGrid8 f;
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
            Complex acc = 0.0;
            for (int n = 0; n < 8; ++n) {
                acc += g[static_cast<size_t>(u) * 8 + n] * w[static_cast<size_t>(v) * 8 + n];
            }
            f[static_cast<size_t>(u) * 8 + v] = acc;
        }
    }
    return f;
}

ComplexGrid8 center_shift(const ComplexGrid8& f) {
    ComplexGrid8 shifted;
    for (int u = 0; u < 8; ++u) {
        for (int v = 0; v < 8; ++v) {
            shifted[static_cast<size_t>(u) * 8 + v] =
                f[static_cast<size_t>((u + 4) % 8) * 8 + (v + 4) % 8];
        }
    }
    return shifted;
}

std::vector<BlockSpectrum> block_spectra(const double* data, int width, int height) {
    const int block_rows = height / kBlockSize;
    const int block_cols = width / kBlockSize;
    std::vector<BlockSpectrum> out;
    out.reserve(static_cast<size_t>(block_rows) * block_cols);
    RealGrid8 tile;
    for (int br = 0; br < block_rows; ++br) {
        for (int bc = 0; bc < block_cols; ++bc) {
            for (int m = 0; m < 8; ++m) {
                const double* src = data + static_cast<size_t>(br * 8 + m) * width + bc * 8;
                for (int n = 0; n < 8; ++n) tile[static_cast<size_t>(m) * 8 + n] = src[n];
            }
            const ComplexGrid8 shifted = center_shift(dft8x8(tile));
            BlockSpectrum spec;
            spec.block_row = br;
            spec.block_col = bc;
            for (size_t i = 0; i < 64; ++i) spec.mag[i] = std::abs(shifted[i]);
            out.push_back(spec);
        }
    }
    return out;
}

}  // namespace fqa
