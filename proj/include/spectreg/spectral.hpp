// spectral.hpp - DFT primitives, centered shifts, crop/pad and the zero-pad + inverse-DFT decoder.
//
// Transform convention (fixed, independent of the FFT backend):
//   forward  C[k] = sum_x f[x] exp(-2 pi i <k, x / dims>)          (unnormalized)
//   inverse  f[x] = 1/|dims| sum_k C[k] exp(+2 pi i <k, x / dims>)
//
// Decoder: a real low-resolution field s on the band grid is transformed, centered, its
// most-negative frequency row/column/plane is zeroed, the patch is zero-padded into the full
// centered spectrum, uncentered, inverse transformed and multiplied by the gain a*b[*c]. The
// gain makes a constant s = c decode to a constant displacement of c voxels. The output is
// exactly band-limited and exactly real.

#pragma once

#include "spectreg/core.hpp"

namespace spectreg {

enum class SpectrumLayout { corner, centered };

// Full-resolution complex spectrum with one or more lanes.
class FullSpectrum {
  public:
    FullSpectrum() = default;
    FullSpectrum(GridSpec grid, int lanes, SpectrumLayout layout, std::vector<cplx> data);

    const GridSpec &grid() const { return grid_; }
    int lanes() const { return lanes_; }
    SpectrumLayout layout() const { return layout_; }
    std::span<const cplx> data() const { return data_; }
    std::span<const cplx> lane(int c) const;

  private:
    GridSpec grid_;
    int lanes_ = 0;
    SpectrumLayout layout_ = SpectrumLayout::corner;
    std::vector<cplx> data_;
};

// Real lanes recovered by an inverse transform, with the largest discarded imaginary part.
struct RealLanes {
    std::vector<double> values;
    double imag_residual = 0.0;
};

FullSpectrum dft(const GridSpec &grid, std::span<const double> lane);
FullSpectrum dft(const DenseField &field);

// Throws numerical_error("non-Hermitian spectrum") when the imaginary residual exceeds
// 1e-6 * (max |real| + 1e-12). Input must be in corner layout.
RealLanes idft(const FullSpectrum &spectrum);

FullSpectrum shift_center(const FullSpectrum &spectrum);
FullSpectrum unshift_center(const FullSpectrum &spectrum);

// Rotates every axis of a row-major lane by half its extent. Works on any even-extent grid,
// including band grids; it is its own inverse.
void rotate_half(std::span<const cplx> in, std::span<cplx> out, const Extents &dims);

// Centered sub-block of a centered spectrum, with the leading (most-negative frequency)
// index zeroed along every axis.
BandSpectrum crop_center(const FullSpectrum &centered, const CropWindow &window);

// Zero-pads a Nyquist-zeroed band patch into its parent grid (centered layout).
FullSpectrum pad_center(const BandSpectrum &band);

// Nyquist-zeroed centered small-grid DFT of a low-resolution field.
BandSpectrum band_spectrum(const LowResField &s);

struct Decoded {
    DenseField field;
    double imag_residual = 0.0;
};

Decoded decode_with_residual(const LowResField &s);
DenseField decode(const LowResField &s);
// Decodes an explicit band patch with the given gain (the window gain by default).
Decoded decode_band(const BandSpectrum &band, double gain);

struct Encoded {
    BandSpectrum band;
    // Small-grid inverse transform of the band patch: equals a*b[*c] * phi at the subsampled
    // points for band-limited phi.
    LowResField raw;
    // raw / gain, i.e. the decoder's parameterization: decode(params) reproduces the
    // band-limited projection of phi.
    LowResField params;
    double imag_residual = 0.0;
    // Fraction of spectral energy of phi that falls outside the window (or on its zeroed
    // Nyquist rows) and is therefore discarded.
    double discarded_energy_fraction = 0.0;
};

Encoded encode(const DenseField &phi, const CropWindow &window);

// Transpose of the linear map s -> decode(s).
LowResField decode_adjoint(const DenseField &g, const CropWindow &window);

// Largest spectral magnitude outside the window (Nyquist rows included) divided by the largest
// magnitude overall, maximized over channels. Zero for an all-zero field.
double out_of_band_peak_ratio(const DenseField &phi, const CropWindow &window);

// Spectral energy outside the kept band divided by total energy, over all channels.
double out_of_band_energy_fraction(const DenseField &phi, const CropWindow &window);

} // namespace spectreg
