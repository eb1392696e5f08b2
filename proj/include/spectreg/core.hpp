// core.hpp - grid containers and shape bookkeeping shared by every spectreg module.
//
// Storage convention: row-major, last axis fastest. A 2D grid (M, N) stores voxel (i, j) at
// i * N + j; a 3D grid (M, N, P) stores (i, j, k) at (i * N + j) * P + k. Multi-channel fields
// store channel c as a contiguous block at offset c * voxel_count, and channel c holds the
// displacement along axis c, in voxels. Voxel spacing is 1 along every axis.

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spectreg {

using Extents = std::vector<std::int64_t>;
using cplx = std::complex<double>;

// A numeric consistency check failed (e.g. a spectrum that should be Hermitian is not).
class numerical_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Reading or writing a file failed.
class io_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class GridSpec {
  public:
    GridSpec() = default;

    const Extents &dims() const { return dims_; }
    int ndim() const { return static_cast<int>(dims_.size()); }
    std::int64_t extent(int axis) const { return dims_.at(static_cast<std::size_t>(axis)); }
    std::int64_t voxel_count() const;

    bool operator==(const GridSpec &) const = default;

  private:
    explicit GridSpec(Extents dims) : dims_(std::move(dims)) {}
    friend GridSpec make_grid(std::span<const std::int64_t> dims);

    Extents dims_;
};

// Validates 2 or 3 extents, each even and >= 4.
GridSpec make_grid(std::span<const std::int64_t> dims);
inline GridSpec make_grid(std::initializer_list<std::int64_t> dims) {
    return make_grid(std::span<const std::int64_t>(dims.begin(), dims.size()));
}

// Centered low-frequency window of a parent grid. Band extent m_c along an axis of parent
// extent m covers centered-layout indices [m/2 - m_c/2, m/2 + m_c/2).
class CropWindow {
  public:
    CropWindow() = default;

    const GridSpec &parent() const { return parent_; }
    const Extents &band_dims() const { return band_dims_; }
    const Extents &factors() const { return factors_; }
    int ndim() const { return parent_.ndim(); }
    std::int64_t band_count() const;

    // Product of the per-axis factors, a*b[*c].
    double gain() const;

    // Offset of band index 0 inside the parent's centered layout along `axis`.
    std::int64_t offset(int axis) const;

    bool operator==(const CropWindow &) const = default;

  private:
    CropWindow(GridSpec parent, Extents band, Extents factors)
        : parent_(std::move(parent)), band_dims_(std::move(band)), factors_(std::move(factors)) {}
    friend CropWindow make_window(const GridSpec &grid, std::span<const std::int64_t> band_dims);

    GridSpec parent_;
    Extents band_dims_;
    Extents factors_;
};

CropWindow make_window(const GridSpec &grid, std::span<const std::int64_t> band_dims);
inline CropWindow make_window(const GridSpec &grid, std::initializer_list<std::int64_t> band_dims) {
    return make_window(grid, std::span<const std::int64_t>(band_dims.begin(), band_dims.size()));
}

class ScalarImage {
  public:
    ScalarImage() = default;
    ScalarImage(GridSpec grid, std::vector<double> values);

    const GridSpec &grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double at(std::int64_t flat) const { return values_[static_cast<std::size_t>(flat)]; }

  private:
    GridSpec grid_;
    std::vector<double> values_;
};

class DenseField {
  public:
    DenseField() = default;
    DenseField(GridSpec grid, std::vector<double> data);
    static DenseField zeros(const GridSpec &grid);

    const GridSpec &grid() const { return grid_; }
    int channels() const { return grid_.ndim(); }
    std::span<const double> data() const { return data_; }
    std::span<const double> channel(int c) const;
    double max_abs() const;

  private:
    GridSpec grid_;
    std::vector<double> data_;
};

class LowResField {
  public:
    LowResField() = default;
    LowResField(CropWindow window, std::vector<double> data);
    static LowResField zeros(const CropWindow &window);

    const CropWindow &window() const { return window_; }
    int channels() const { return window_.ndim(); }
    std::span<const double> data() const { return data_; }
    std::span<const double> channel(int c) const;

  private:
    CropWindow window_;
    std::vector<double> data_;
};

// Complex band patch, centered layout (DC at band_dims / 2), one lane per channel.
class BandSpectrum {
  public:
    BandSpectrum() = default;
    BandSpectrum(CropWindow window, std::vector<cplx> data);

    const CropWindow &window() const { return window_; }
    int channels() const { return window_.ndim(); }
    std::span<const cplx> data() const { return data_; }
    std::span<const cplx> channel(int c) const;

  private:
    CropWindow window_;
    std::vector<cplx> data_;
};

class LabelMap {
  public:
    LabelMap() = default;
    LabelMap(GridSpec grid, std::vector<std::int32_t> values);

    const GridSpec &grid() const { return grid_; }
    std::span<const std::int32_t> values() const { return values_; }

  private:
    GridSpec grid_;
    std::vector<std::int32_t> values_;
};

// Helpers shared by the voxel loops.
std::int64_t product(const Extents &dims);
std::string format_extents(const Extents &dims);

} // namespace spectreg
