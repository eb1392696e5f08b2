#include "spectreg/spectral.hpp"

#include "spectreg/fft.hpp"

#include <algorithm>
#include <cmath>

namespace spectreg {

namespace {

// Odometer over a row-major multi-index; returns false after the last index.
bool advance(std::vector<std::int64_t> &idx, const Extents &dims) {
    for (int a = static_cast<int>(dims.size()) - 1; a >= 0; --a) {
        const auto ua = static_cast<std::size_t>(a);
        if (++idx[ua] < dims[ua]) return true;
        idx[ua] = 0;
    }
    return false;
}

std::int64_t flatten(const std::vector<std::int64_t> &idx, const Extents &dims) {
    std::int64_t flat = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) flat = flat * dims[a] + idx[a];
    return flat;
}

// True when a centered full-grid index lies in the kept part of the window (Nyquist rows excluded).
bool in_kept_band(const std::vector<std::int64_t> &centered_idx, const CropWindow &window) {
    for (std::size_t a = 0; a < centered_idx.size(); ++a) {
        const auto lo = window.offset(static_cast<int>(a));
        const auto k = centered_idx[a];
        if (k <= lo || k >= lo + window.band_dims()[a]) return false;
    }
    return true;
}

RealLanes inverse_real(std::vector<cplx> data, const Extents &dims, int lanes) {
    const auto n = static_cast<std::size_t>(product(dims));
    const double scale = 1.0 / static_cast<double>(n);
    RealLanes out;
    out.values.resize(data.size());
    double max_real = 0.0;
    for (int c = 0; c < lanes; ++c) {
        std::span<cplx> lane(data.data() + static_cast<std::size_t>(c) * n, n);
        fft::transform(lane, dims, fft::Direction::inverse);
        for (std::size_t i = 0; i < n; ++i) {
            const auto v = lane[i] * scale;
            out.values[static_cast<std::size_t>(c) * n + i] = v.real();
            max_real = std::max(max_real, std::abs(v.real()));
            out.imag_residual = std::max(out.imag_residual, std::abs(v.imag()));
        }
    }
    if (out.imag_residual > 1e-6 * (max_real + 1e-12)) {
        throw numerical_error("non-Hermitian spectrum: imaginary residual " + std::to_string(out.imag_residual) +
                              " against max real magnitude " + std::to_string(max_real));
    }
    return out;
}

std::vector<cplx> forward_lanes(std::span<const double> values, const Extents &dims, int lanes) {
    const auto n = static_cast<std::size_t>(product(dims));
    std::vector<cplx> data(values.begin(), values.end());
    for (int c = 0; c < lanes; ++c) {
        fft::transform(std::span<cplx>(data.data() + static_cast<std::size_t>(c) * n, n), dims,
                       fft::Direction::forward);
    }
    return data;
}

std::vector<cplx> rotate_lanes(std::span<const cplx> in, const Extents &dims, int lanes) {
    const auto n = static_cast<std::size_t>(product(dims));
    std::vector<cplx> out(in.size());
    for (int c = 0; c < lanes; ++c) {
        const auto off = static_cast<std::size_t>(c) * n;
        rotate_half(in.subspan(off, n), std::span<cplx>(out).subspan(off, n), dims);
    }
    return out;
}

// Centered band patch of `full_centered` (one lane), Nyquist rows zeroed.
void crop_lane(std::span<const cplx> full_centered, std::span<cplx> band, const CropWindow &window) {
    const auto &dims = window.parent().dims();
    const auto &bdims = window.band_dims();
    std::vector<std::int64_t> bidx(bdims.size(), 0), fidx(bdims.size(), 0);
    do {
        bool nyquist = false;
        for (std::size_t a = 0; a < bdims.size(); ++a) {
            fidx[a] = bidx[a] + window.offset(static_cast<int>(a));
            nyquist = nyquist || bidx[a] == 0;
        }
        band[static_cast<std::size_t>(flatten(bidx, bdims))] =
            nyquist ? cplx(0.0, 0.0) : full_centered[static_cast<std::size_t>(flatten(fidx, dims))];
    } while (advance(bidx, bdims));
}

} // namespace

FullSpectrum::FullSpectrum(GridSpec grid, int lanes, SpectrumLayout layout, std::vector<cplx> data)
    : grid_(std::move(grid)), lanes_(lanes), layout_(layout), data_(std::move(data)) {
    if (lanes_ < 1 || static_cast<std::int64_t>(data_.size()) != grid_.voxel_count() * lanes_) {
        throw std::invalid_argument("spectrum payload does not match its grid and lane count");
    }
}

std::span<const cplx> FullSpectrum::lane(int c) const {
    const auto n = static_cast<std::size_t>(grid_.voxel_count());
    return std::span<const cplx>(data_).subspan(static_cast<std::size_t>(c) * n, n);
}

FullSpectrum dft(const GridSpec &grid, std::span<const double> lane) {
    if (static_cast<std::int64_t>(lane.size()) != grid.voxel_count()) {
        throw std::invalid_argument("lane length does not match grid " + format_extents(grid.dims()));
    }
    return FullSpectrum(grid, 1, SpectrumLayout::corner, forward_lanes(lane, grid.dims(), 1));
}

FullSpectrum dft(const DenseField &field) {
    return FullSpectrum(field.grid(), field.channels(), SpectrumLayout::corner,
                        forward_lanes(field.data(), field.grid().dims(), field.channels()));
}

RealLanes idft(const FullSpectrum &spectrum) {
    if (spectrum.layout() != SpectrumLayout::corner) {
        throw std::invalid_argument("idft expects a corner-layout spectrum");
    }
    return inverse_real(std::vector<cplx>(spectrum.data().begin(), spectrum.data().end()), spectrum.grid().dims(),
                        spectrum.lanes());
}

void rotate_half(std::span<const cplx> in, std::span<cplx> out, const Extents &dims) {
    std::vector<std::int64_t> idx(dims.size(), 0), dst(dims.size(), 0);
    std::size_t flat = 0;
    do {
        for (std::size_t a = 0; a < dims.size(); ++a) dst[a] = (idx[a] + dims[a] / 2) % dims[a];
        out[static_cast<std::size_t>(flatten(dst, dims))] = in[flat++];
    } while (advance(idx, dims));
}

FullSpectrum shift_center(const FullSpectrum &spectrum) {
    return FullSpectrum(spectrum.grid(), spectrum.lanes(), SpectrumLayout::centered,
                        rotate_lanes(spectrum.data(), spectrum.grid().dims(), spectrum.lanes()));
}

FullSpectrum unshift_center(const FullSpectrum &spectrum) {
    return FullSpectrum(spectrum.grid(), spectrum.lanes(), SpectrumLayout::corner,
                        rotate_lanes(spectrum.data(), spectrum.grid().dims(), spectrum.lanes()));
}

BandSpectrum crop_center(const FullSpectrum &centered, const CropWindow &window) {
    if (centered.layout() != SpectrumLayout::centered) {
        throw std::invalid_argument("crop_center expects a centered spectrum");
    }
    if (!(centered.grid() == window.parent()) || centered.lanes() != window.ndim()) {
        throw std::invalid_argument("spectrum grid does not match the crop window parent");
    }
    const auto nb = static_cast<std::size_t>(window.band_count());
    std::vector<cplx> band(nb * static_cast<std::size_t>(window.ndim()));
    for (int c = 0; c < window.ndim(); ++c) {
        crop_lane(centered.lane(c), std::span<cplx>(band).subspan(static_cast<std::size_t>(c) * nb, nb), window);
    }
    return BandSpectrum(window, std::move(band));
}

FullSpectrum pad_center(const BandSpectrum &band) {
    const auto &window = band.window();
    const auto &dims = window.parent().dims();
    const auto &bdims = window.band_dims();
    const auto n = static_cast<std::size_t>(window.parent().voxel_count());
    std::vector<cplx> full(n * static_cast<std::size_t>(window.ndim()), cplx(0.0, 0.0));
    for (int c = 0; c < window.ndim(); ++c) {
        const auto lane = band.channel(c);
        std::vector<std::int64_t> bidx(bdims.size(), 0), fidx(bdims.size(), 0);
        std::size_t flat = 0;
        do {
            const auto v = lane[flat++];
            bool nyquist = false;
            for (std::size_t a = 0; a < bdims.size(); ++a) {
                fidx[a] = bidx[a] + window.offset(static_cast<int>(a));
                nyquist = nyquist || bidx[a] == 0;
            }
            if (nyquist && v != cplx(0.0, 0.0)) {
                throw std::invalid_argument("band patch has a nonzero Nyquist coefficient; a real decode is impossible");
            }
            full[static_cast<std::size_t>(c) * n + static_cast<std::size_t>(flatten(fidx, dims))] = v;
        } while (advance(bidx, bdims));
    }
    return FullSpectrum(window.parent(), window.ndim(), SpectrumLayout::centered, std::move(full));
}

BandSpectrum band_spectrum(const LowResField &s) {
    const auto &window = s.window();
    const auto &bdims = window.band_dims();
    const auto nb = static_cast<std::size_t>(window.band_count());
    auto corner = forward_lanes(s.data(), bdims, s.channels());
    auto centered = rotate_lanes(corner, bdims, s.channels());
    for (int c = 0; c < s.channels(); ++c) {
        std::vector<std::int64_t> idx(bdims.size(), 0);
        std::size_t flat = 0;
        do {
            if (std::find(idx.begin(), idx.end(), 0) != idx.end()) {
                centered[static_cast<std::size_t>(c) * nb + flat] = cplx(0.0, 0.0);
            }
            ++flat;
        } while (advance(idx, bdims));
    }
    return BandSpectrum(window, std::move(centered));
}

Decoded decode_band(const BandSpectrum &band, double gain) {
    const auto &grid = band.window().parent();
    auto corner = unshift_center(pad_center(band));
    auto lanes = idft(corner);
    for (auto &v : lanes.values) v *= gain;
    return Decoded{DenseField(grid, std::move(lanes.values)), lanes.imag_residual * gain};
}

Decoded decode_with_residual(const LowResField &s) { return decode_band(band_spectrum(s), s.window().gain()); }

DenseField decode(const LowResField &s) { return decode_with_residual(s).field; }

Encoded encode(const DenseField &phi, const CropWindow &window) {
    if (!(phi.grid() == window.parent())) {
        throw std::invalid_argument("field grid " + format_extents(phi.grid().dims()) +
                                    " does not match the window parent " +
                                    format_extents(window.parent().dims()));
    }
    const auto full = dft(phi);
    auto band = crop_center(shift_center(full), window);

    double total = 0.0, kept = 0.0;
    for (const auto &v : full.data()) total += std::norm(v);
    for (const auto &v : band.data()) kept += std::norm(v);

    const auto &bdims = window.band_dims();
    auto small = inverse_real(rotate_lanes(band.data(), bdims, window.ndim()), bdims, window.ndim());
    std::vector<double> params(small.values);
    for (auto &v : params) v /= window.gain();

    Encoded out{std::move(band), LowResField(window, std::move(small.values)), LowResField(window, std::move(params)),
                small.imag_residual, total > 0.0 ? std::max(0.0, 1.0 - kept / total) : 0.0};
    return out;
}

LowResField decode_adjoint(const DenseField &g, const CropWindow &window) {
    if (!(g.grid() == window.parent())) {
        throw std::invalid_argument("gradient grid does not match the window parent");
    }
    const auto &dims = window.parent().dims();
    const auto &bdims = window.band_dims();
    const auto n = static_cast<std::size_t>(window.parent().voxel_count());
    const auto nb = static_cast<std::size_t>(window.band_count());
    const double scale = window.gain() / static_cast<double>(n);

    auto spec = forward_lanes(g.data(), dims, g.channels());
    for (auto &v : spec) v = std::conj(v) * scale;
    auto band = crop_center(FullSpectrum(window.parent(), g.channels(), SpectrumLayout::centered,
                                         rotate_lanes(spec, dims, g.channels())),
                            window);
    auto small = rotate_lanes(band.data(), bdims, g.channels());
    std::vector<double> out(small.size());
    for (int c = 0; c < g.channels(); ++c) {
        std::span<cplx> lane(small.data() + static_cast<std::size_t>(c) * nb, nb);
        fft::transform(lane, bdims, fft::Direction::forward);
        for (std::size_t i = 0; i < nb; ++i) out[static_cast<std::size_t>(c) * nb + i] = lane[i].real();
    }
    return LowResField(window, std::move(out));
}

double out_of_band_peak_ratio(const DenseField &phi, const CropWindow &window) {
    const auto centered = shift_center(dft(phi));
    const auto &dims = phi.grid().dims();
    double peak = 0.0, outside = 0.0;
    for (int c = 0; c < phi.channels(); ++c) {
        const auto lane = centered.lane(c);
        std::vector<std::int64_t> idx(dims.size(), 0);
        std::size_t flat = 0;
        do {
            const double mag = std::abs(lane[flat++]);
            peak = std::max(peak, mag);
            if (!in_kept_band(idx, window)) outside = std::max(outside, mag);
        } while (advance(idx, dims));
    }
    return peak > 0.0 ? outside / peak : 0.0;
}

double out_of_band_energy_fraction(const DenseField &phi, const CropWindow &window) {
    const auto centered = shift_center(dft(phi));
    const auto &dims = phi.grid().dims();
    double total = 0.0, outside = 0.0;
    for (int c = 0; c < phi.channels(); ++c) {
        const auto lane = centered.lane(c);
        std::vector<std::int64_t> idx(dims.size(), 0);
        std::size_t flat = 0;
        do {
            const double e = std::norm(lane[flat++]);
            total += e;
            if (!in_kept_band(idx, window)) outside += e;
        } while (advance(idx, dims));
    }
    return total > 0.0 ? outside / total : 0.0;
}

} // namespace spectreg
