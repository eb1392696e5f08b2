// Random inputs built from library types.

#pragma once

#include "oracles.hpp"
#include "spectreg/spectral.hpp"

#include <filesystem>
#include <string>

namespace fixture {

using namespace spectreg;

inline LowResField random_lowres(const CropWindow &window, oracle::Gen &gen, double scale = 1.0) {
    auto v = gen.normals(static_cast<std::size_t>(window.band_count() * window.ndim()));
    for (auto &x : v) x *= scale;
    return LowResField(window, std::move(v));
}

// Decoded random field rescaled to the given peak magnitude.
inline DenseField smooth_field(const GridSpec &grid, const Extents &band, double peak, oracle::Gen &gen) {
    const auto window = make_window(grid, band);
    auto f = decode(random_lowres(window, gen));
    std::vector<double> d(f.data().begin(), f.data().end());
    const double m = f.max_abs();
    for (auto &x : d) x *= peak / m;
    return DenseField(grid, std::move(d));
}

inline ScalarImage random_image(const GridSpec &grid, oracle::Gen &gen) {
    return ScalarImage(grid, gen.uniforms(static_cast<std::size_t>(grid.voxel_count()), 0.0, 1.0));
}

// Smooth test image with structure at several scales.
inline ScalarImage smooth_image(const GridSpec &grid, oracle::Gen &gen) {
    auto f = smooth_field(grid, [&] {
        Extents b;
        for (auto d : grid.dims()) b.push_back(d / 2);
        return b;
    }(), 1.0, gen);
    return ScalarImage(grid, std::vector<double>(f.channel(0).begin(), f.channel(0).end()));
}

inline std::filesystem::path temp_dir(const std::string &name) {
    auto dir = std::filesystem::temp_directory_path() / ("spectreg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace fixture
