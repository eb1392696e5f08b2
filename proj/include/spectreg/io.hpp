// io.hpp - NIfTI-1 volumes, raw-manifest fields and portable graymap/pixmap renders.
//
// NIfTI stores dim[1] fastest; volumes are transposed on load so that GridSpec dims
// (dim[1], dim[2][, dim[3]]) are in row-major order with the last axis fastest.

#pragma once

#include "spectreg/core.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <variant>

namespace spectreg {

namespace nifti {
inline constexpr int header_size = 348;
inline constexpr int vox_offset = 352;
inline constexpr std::int16_t dt_uint8 = 2;
inline constexpr std::int16_t dt_int16 = 4;
inline constexpr std::int16_t dt_float32 = 16;
inline constexpr std::int16_t dt_float64 = 64;
} // namespace nifti

// Orientation fields carried through unchanged; never applied to the data.
struct Orientation {
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    float qfac = 1.0f;
    std::array<float, 3> quatern{};
    std::array<float, 3> qoffset{};
    std::array<float, 12> srow{};
    std::uint8_t xyzt_units = 2;
};

struct VolumeMeta {
    Extents dims;
    std::int16_t datatype = nifti::dt_float32;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    double scl_slope = 1.0;
    double scl_inter = 0.0;
    bool big_endian = false;
    std::string source;
    Orientation orientation;
};

struct Volume {
    GridSpec grid;
    std::vector<double> values;
    VolumeMeta meta;

    ScalarImage image() const;
    // Requires non-negative integer values.
    LabelMap labels() const;
};

// Reads .nii, .nii.gz, or a .hdr/.img pair (optionally gzipped). Scaling is applied when
// scl_slope != 0.
Volume read_nifti(const std::filesystem::path &path);

struct NiftiWriteOptions {
    bool big_endian = false;
};

// Float32 payload, magic "n+1", vox_offset 352. A ".gz" suffix writes gzip.
void write_nifti(const GridSpec &grid, std::span<const double> values, const VolumeMeta &meta,
                 const std::filesystem::path &path, const NiftiWriteOptions &options = {});
void write_nifti(const ScalarImage &image, const VolumeMeta &meta, const std::filesystem::path &path,
                 const NiftiWriteOptions &options = {});
void write_nifti(const LabelMap &labels, const VolumeMeta &meta, const std::filesystem::path &path,
                 const NiftiWriteOptions &options = {});

// Raw-manifest field format: <stem>.json describes dims, band dims, channel count, dtype and
// byte order; <stem>.raw holds the little-endian channels back to back.
enum class FieldDtype { float32, float64 };

using AnyField = std::variant<DenseField, LowResField>;

void write_field(const DenseField &field, const std::filesystem::path &path, FieldDtype dtype = FieldDtype::float32);
void write_field(const LowResField &field, const std::filesystem::path &path, FieldDtype dtype = FieldDtype::float32);
AnyField read_field(const std::filesystem::path &path);
DenseField read_dense_field(const std::filesystem::path &path);
LowResField read_lowres_field(const std::filesystem::path &path);
// Manifest path for a stem, directory or explicit .json path.
std::filesystem::path manifest_path(const std::filesystem::path &path);

// Min-max normalized 8-bit graymap of one slice; a constant slice renders mid-gray. For 2D
// images `axis` and `index` are ignored.
void render_slice(const ScalarImage &image, int axis, std::int64_t index, const std::filesystem::path &path);

// Gridlines every `stride` voxels mapped through x + phi(x) on the selected slice, dark on white.
void render_grid(const DenseField &phi, int stride, int axis, std::int64_t index, const std::filesystem::path &path);

// log(1 + |C|) of the centered 2D spectrum of one channel's slice, min-max normalized.
void render_spectrum(const DenseField &field, int channel, int axis, std::int64_t index,
                     const std::filesystem::path &path);

// Width x height 8-bit samples of a binary PGM; used by tests to inspect renders.
struct Graymap {
    std::int64_t width = 0;
    std::int64_t height = 0;
    std::vector<std::uint8_t> pixels;
};
Graymap read_pgm(const std::filesystem::path &path);

} // namespace spectreg
