#include "spectreg/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spectreg {

namespace {

template <class T>
void require_finite(std::span<const T> values, const char *what) {
    for (const auto &v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + " contains a non-finite value");
        }
    }
}

} // namespace

std::int64_t product(const Extents &dims) {
    std::int64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::string format_extents(const Extents &dims) {
    std::ostringstream os;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) os << 'x';
        os << dims[i];
    }
    return os.str();
}

std::int64_t GridSpec::voxel_count() const { return product(dims_); }

GridSpec make_grid(std::span<const std::int64_t> dims) {
    if (dims.size() != 2 && dims.size() != 3) {
        throw std::invalid_argument("grid must have 2 or 3 axes, got " + std::to_string(dims.size()));
    }
    for (std::size_t a = 0; a < dims.size(); ++a) {
        const auto m = dims[a];
        if (m < 4) {
            throw std::invalid_argument("axis " + std::to_string(a) + " extent " + std::to_string(m) +
                                        " is below the minimum of 4");
        }
        if (m % 2 != 0) {
            throw std::invalid_argument("axis " + std::to_string(a) + " extent odd (" + std::to_string(m) + ")");
        }
    }
    return GridSpec(Extents(dims.begin(), dims.end()));
}

std::int64_t CropWindow::band_count() const { return product(band_dims_); }

double CropWindow::gain() const { return static_cast<double>(product(factors_)); }

std::int64_t CropWindow::offset(int axis) const {
    const auto a = static_cast<std::size_t>(axis);
    return parent_.dims()[a] / 2 - band_dims_[a] / 2;
}

CropWindow make_window(const GridSpec &grid, std::span<const std::int64_t> band_dims) {
    if (static_cast<int>(band_dims.size()) != grid.ndim()) {
        throw std::invalid_argument("band has " + std::to_string(band_dims.size()) + " extents but the grid has " +
                                    std::to_string(grid.ndim()) + " axes");
    }
    Extents factors(band_dims.size());
    for (std::size_t a = 0; a < band_dims.size(); ++a) {
        const auto mc = band_dims[a];
        const auto m = grid.dims()[a];
        const auto axis = "axis " + std::to_string(a) + ": ";
        if (mc < 2) {
            throw std::invalid_argument(axis + "band extent " + std::to_string(mc) + " is below the minimum of 2");
        }
        if (mc % 2 != 0) {
            throw std::invalid_argument(axis + "band extent " + std::to_string(mc) + " is odd");
        }
        if (m % mc != 0) {
            throw std::invalid_argument(axis + "band extent " + std::to_string(mc) + " does not divide grid extent " +
                                        std::to_string(m) + " (factor " + std::to_string(m) + "/" +
                                        std::to_string(mc) + " not integer)");
        }
        const auto f = m / mc;
        if (f % 2 != 0) {
            throw std::invalid_argument(axis + "factor " + std::to_string(f) + " = " + std::to_string(m) + "/" +
                                        std::to_string(mc) + " is odd");
        }
        factors[a] = f;
    }
    return CropWindow(grid, Extents(band_dims.begin(), band_dims.end()), std::move(factors));
}

ScalarImage::ScalarImage(GridSpec grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::int64_t>(values_.size()) != grid_.voxel_count()) {
        throw std::invalid_argument("image payload has " + std::to_string(values_.size()) + " values, grid " +
                                    format_extents(grid_.dims()) + " needs " + std::to_string(grid_.voxel_count()));
    }
    require_finite<double>(values_, "image");
}

DenseField::DenseField(GridSpec grid, std::vector<double> data) : grid_(std::move(grid)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != grid_.voxel_count() * grid_.ndim()) {
        throw std::invalid_argument("field payload has " + std::to_string(data_.size()) + " values, expected " +
                                    std::to_string(grid_.ndim()) + " channels over " + format_extents(grid_.dims()));
    }
    require_finite<double>(data_, "field");
}

DenseField DenseField::zeros(const GridSpec &grid) {
    return DenseField(grid, std::vector<double>(static_cast<std::size_t>(grid.voxel_count() * grid.ndim()), 0.0));
}

std::span<const double> DenseField::channel(int c) const {
    const auto n = static_cast<std::size_t>(grid_.voxel_count());
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * n, n);
}

double DenseField::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

LowResField::LowResField(CropWindow window, std::vector<double> data) : window_(std::move(window)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != window_.band_count() * window_.ndim()) {
        throw std::invalid_argument("low-resolution payload has " + std::to_string(data_.size()) + " values, expected " +
                                    std::to_string(window_.ndim()) + " channels over " +
                                    format_extents(window_.band_dims()));
    }
    require_finite<double>(data_, "low-resolution field");
}

LowResField LowResField::zeros(const CropWindow &window) {
    return LowResField(window, std::vector<double>(static_cast<std::size_t>(window.band_count() * window.ndim()), 0.0));
}

std::span<const double> LowResField::channel(int c) const {
    const auto n = static_cast<std::size_t>(window_.band_count());
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * n, n);
}

BandSpectrum::BandSpectrum(CropWindow window, std::vector<cplx> data) : window_(std::move(window)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != window_.band_count() * window_.ndim()) {
        throw std::invalid_argument("band spectrum has the wrong number of coefficients");
    }
}

std::span<const cplx> BandSpectrum::channel(int c) const {
    const auto n = static_cast<std::size_t>(window_.band_count());
    return std::span<const cplx>(data_).subspan(static_cast<std::size_t>(c) * n, n);
}

LabelMap::LabelMap(GridSpec grid, std::vector<std::int32_t> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<std::int64_t>(values_.size()) != grid_.voxel_count()) {
        throw std::invalid_argument("label payload length does not match grid " + format_extents(grid_.dims()));
    }
    for (auto v : values_) {
        if (v < 0) throw std::invalid_argument("label map contains a negative label");
    }
}

} // namespace spectreg
