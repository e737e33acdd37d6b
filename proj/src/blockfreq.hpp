#pragma once

#include <array>
#include <complex>
#include <vector>

#include "image.hpp"
#include "mscn.hpp"

namespace fqa {

using Complex = std::complex<double>;
using ComplexGrid8 = std::array<Complex, 64>;   // row-major (u, v)
using RealGrid8 = std::array<double, 64>;

enum class Band : uint8_t { DC, LF, MF, HF };

// Manhattan-distance frequency index of every cell of a center-shifted 8x8
// spectrum: i(u,v) = |4-u| + |4-v|, DC at (4,4). Bands: DC i=0, LF 1..3,
// MF 4, HF 5..8.
struct BandIndexMap {
    std::array<int, 64> index{};
    std::array<Band, 64> band{};
};

const BandIndexMap& manhattan_index();

// Unnormalized forward 2-D DFT of one 8x8 block (row-major input).
ComplexGrid8 dft8x8(const RealGrid8& block);

// Circular shift by (4,4) bringing the zero frequency to cell (4,4).
ComplexGrid8 center_shift(const ComplexGrid8& f);

// Center-shifted magnitude spectrum of one 8x8 tile.
struct BlockSpectrum {
    int block_row = 0;
    int block_col = 0;
    RealGrid8 mag{};
};

// Non-overlapping 8x8 tiling from the top-left corner, remainder rows and
// columns cropped; one spectrum per tile.
std::vector<BlockSpectrum> block_spectra(const double* data, int width, int height);

inline std::vector<BlockSpectrum> block_spectra(const GrayImage& img) {
    return block_spectra(img.data().data(), img.width(), img.height());
}
inline std::vector<BlockSpectrum> block_spectra(const MscnField& f) {
    return block_spectra(f.values.data(), f.width, f.height);
}

}  // namespace fqa
