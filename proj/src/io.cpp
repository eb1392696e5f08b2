#include "spectreg/io.hpp"

#include "spectreg/fft.hpp"

#include "sampling.hpp"

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spectreg {

namespace fs = std::filesystem;

namespace {

bool ends_with(const std::string &s, const std::string &suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Reads a whole file, inflating it when gzip-compressed.
std::vector<std::uint8_t> slurp(const fs::path &path) {
    gzFile file = gzopen(path.string().c_str(), "rb");
    if (file == nullptr) throw io_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes;
    std::vector<std::uint8_t> chunk(1 << 16);
    for (;;) {
        const int got = gzread(file, chunk.data(), static_cast<unsigned>(chunk.size()));
        if (got < 0) {
            int err = 0;
            const std::string msg = gzerror(file, &err);
            gzclose(file);
            throw io_error("read error in " + path.string() + ": " + msg);
        }
        if (got == 0) break;
        bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + got);
    }
    gzclose(file);
    return bytes;
}

void spit(const fs::path &path, const std::vector<std::uint8_t> &bytes) {
    if (ends_with(path.string(), ".gz")) {
        gzFile file = gzopen(path.string().c_str(), "wb");
        if (file == nullptr) throw io_error("cannot write " + path.string());
        const int wrote = bytes.empty() ? 0 : gzwrite(file, bytes.data(), static_cast<unsigned>(bytes.size()));
        const int closed = gzclose(file);
        if (wrote != static_cast<int>(bytes.size()) || closed != Z_OK) throw io_error("write error in " + path.string());
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw io_error("write error in " + path.string());
}

template <class T>
T byteswap_value(T v) {
    std::array<std::uint8_t, sizeof(T)> raw;
    std::memcpy(raw.data(), &v, sizeof(T));
    std::reverse(raw.begin(), raw.end());
    std::memcpy(&v, raw.data(), sizeof(T));
    return v;
}

// Endian-aware view of a header or payload buffer.
class ByteReader {
  public:
    ByteReader(const std::uint8_t *data, std::size_t size, bool swap) : data_(data), size_(size), swap_(swap) {}

    template <class T>
    T get(std::size_t offset) const {
        if (offset + sizeof(T) > size_) throw io_error("truncated NIfTI header");
        T v;
        std::memcpy(&v, data_ + offset, sizeof(T));
        return swap_ ? byteswap_value(v) : v;
    }

  private:
    const std::uint8_t *data_;
    std::size_t size_;
    bool swap_;
};

class ByteWriter {
  public:
    ByteWriter(std::vector<std::uint8_t> &out, bool swap) : out_(out), swap_(swap) {}

    template <class T>
    void put(std::size_t offset, T v) {
        if (swap_) v = byteswap_value(v);
        std::memcpy(out_.data() + offset, &v, sizeof(T));
    }

  private:
    std::vector<std::uint8_t> &out_;
    bool swap_;
};

constexpr bool host_little = std::endian::native == std::endian::little;

// NIfTI offset of our row-major voxel `flat`.
std::vector<std::int64_t> nifti_order(const Extents &dims) {
    const auto n = product(dims);
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    if (dims.size() == 2) {
        for (std::int64_t i = 0; i < dims[0]; ++i)
            for (std::int64_t j = 0; j < dims[1]; ++j) order[static_cast<std::size_t>(i * dims[1] + j)] = i + dims[0] * j;
    } else {
        for (std::int64_t i = 0; i < dims[0]; ++i)
            for (std::int64_t j = 0; j < dims[1]; ++j)
                for (std::int64_t k = 0; k < dims[2]; ++k)
                    order[static_cast<std::size_t>((i * dims[1] + j) * dims[2] + k)] = i + dims[0] * (j + dims[1] * k);
    }
    return order;
}

int bytes_per_voxel(std::int16_t datatype) {
    switch (datatype) {
    case nifti::dt_uint8: return 1;
    case nifti::dt_int16: return 2;
    case nifti::dt_float32: return 4;
    case nifti::dt_float64: return 8;
    default: throw io_error("unsupported NIfTI datatype code " + std::to_string(datatype));
    }
}

double decode_voxel(const ByteReader &r, std::size_t offset, std::int16_t datatype) {
    switch (datatype) {
    case nifti::dt_uint8: return r.get<std::uint8_t>(offset);
    case nifti::dt_int16: return r.get<std::int16_t>(offset);
    case nifti::dt_float32: return r.get<float>(offset);
    default: return r.get<double>(offset);
    }
}

fs::path sibling(const fs::path &path, const std::string &from, const std::string &to) {
    auto s = path.string();
    const bool gz = ends_with(s, ".gz");
    if (gz) s.resize(s.size() - 3);
    if (ends_with(s, from)) s.replace(s.size() - from.size(), from.size(), to);
    if (gz) {
        fs::path candidate(s + ".gz");
        if (fs::exists(candidate)) return candidate;
    }
    return fs::path(s);
}

} // namespace

ScalarImage Volume::image() const { return ScalarImage(grid, values); }

LabelMap Volume::labels() const {
    std::vector<std::int32_t> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!(v >= 0.0) || v != std::floor(v) || v > 2147483647.0) {
            throw std::invalid_argument("volume from " + meta.source + " is not a label map (value " +
                                        std::to_string(v) + ")");
        }
        out[i] = static_cast<std::int32_t>(v);
    }
    return LabelMap(grid, std::move(out));
}

Volume read_nifti(const fs::path &input) {
    fs::path header_path = input;
    if (ends_with(input.string(), ".img") || ends_with(input.string(), ".img.gz")) {
        header_path = sibling(input, ".img", ".hdr");
    }
    const auto bytes = slurp(header_path);
    if (bytes.size() < static_cast<std::size_t>(nifti::header_size)) {
        throw io_error("not a NIfTI-1 file: " + header_path.string() + " is shorter than a header");
    }
    std::int32_t sizeof_hdr;
    std::memcpy(&sizeof_hdr, bytes.data(), 4);
    bool swap = false;
    if (sizeof_hdr != nifti::header_size) {
        if (byteswap_value(sizeof_hdr) != nifti::header_size) {
            throw io_error("not a NIfTI-1 file: " + header_path.string() + " (sizeof_hdr " + std::to_string(sizeof_hdr) +
                           ")");
        }
        swap = true;
    }
    const std::string magic(reinterpret_cast<const char *>(bytes.data()) + 344, 3);
    const bool inline_data = magic == "n+1";
    if (!inline_data && magic != "ni1") throw io_error("not a NIfTI-1 file: bad magic in " + header_path.string());

    const ByteReader h(bytes.data(), bytes.size(), swap);
    const auto rank = h.get<std::int16_t>(40);
    if (rank > 3) {
        throw io_error("dim[0] = " + std::to_string(rank) + " exceeds the 3 supported spatial dimensions");
    }
    if (rank < 2) throw io_error("dim[0] = " + std::to_string(rank) + " is below the 2 required spatial dimensions");
    Extents dims;
    for (int a = 1; a <= rank; ++a) dims.push_back(h.get<std::int16_t>(40 + 2 * static_cast<std::size_t>(a)));
    if (dims.size() == 3 && dims[2] == 1) dims.pop_back();

    VolumeMeta meta;
    meta.dims = dims;
    meta.datatype = h.get<std::int16_t>(70);
    meta.big_endian = swap == host_little;
    meta.source = input.string();
    for (int a = 0; a < 3; ++a) meta.spacing[static_cast<std::size_t>(a)] = h.get<float>(80 + 4 * static_cast<std::size_t>(a));
    meta.scl_slope = h.get<float>(112);
    meta.scl_inter = h.get<float>(116);
    meta.orientation.xyzt_units = h.get<std::uint8_t>(123);
    meta.orientation.qfac = h.get<float>(76);
    meta.orientation.qform_code = h.get<std::int16_t>(252);
    meta.orientation.sform_code = h.get<std::int16_t>(254);
    for (std::size_t i = 0; i < 3; ++i) {
        meta.orientation.quatern[i] = h.get<float>(256 + 4 * i);
        meta.orientation.qoffset[i] = h.get<float>(268 + 4 * i);
    }
    for (std::size_t i = 0; i < 12; ++i) meta.orientation.srow[i] = h.get<float>(280 + 4 * i);

    const int bpv = bytes_per_voxel(meta.datatype);
    GridSpec grid;
    try {
        grid = make_grid(dims);
    } catch (const std::invalid_argument &e) {
        throw io_error("unsupported volume shape " + format_extents(dims) + " in " + input.string() + ": " + e.what());
    }

    std::vector<std::uint8_t> img_bytes;
    const std::vector<std::uint8_t> *payload = &bytes;
    auto offset = static_cast<std::size_t>(h.get<float>(108));
    if (!inline_data) {
        img_bytes = slurp(sibling(header_path, ".hdr", ".img"));
        payload = &img_bytes;
    }
    const auto n = static_cast<std::size_t>(grid.voxel_count());
    const auto need = offset + n * static_cast<std::size_t>(bpv);
    if (payload->size() < need) {
        throw io_error("truncated payload in " + input.string() + ": expected " + std::to_string(need) + " bytes, found " +
                       std::to_string(payload->size()));
    }

    const ByteReader r(payload->data(), payload->size(), swap);
    const auto order = nifti_order(grid.dims());
    const bool scale = meta.scl_slope != 0.0 && std::isfinite(meta.scl_slope);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = decode_voxel(r, offset + static_cast<std::size_t>(order[i]) * static_cast<std::size_t>(bpv), meta.datatype);
        if (scale) v = v * meta.scl_slope + meta.scl_inter;
        values[i] = v;
    }
    return Volume{std::move(grid), std::move(values), std::move(meta)};
}

void write_nifti(const GridSpec &grid, std::span<const double> values, const VolumeMeta &meta, const fs::path &path,
                 const NiftiWriteOptions &options) {
    const auto n = static_cast<std::size_t>(grid.voxel_count());
    if (values.size() != n) throw std::invalid_argument("write_nifti: value count does not match the grid");
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(nifti::vox_offset) + 4 * n, 0);
    ByteWriter w(bytes, options.big_endian == host_little);

    w.put<std::int32_t>(0, nifti::header_size);
    bytes[38] = 'r';
    w.put<std::int16_t>(40, static_cast<std::int16_t>(grid.ndim()));
    for (int a = 1; a <= 7; ++a) {
        const std::int16_t d = a <= grid.ndim() ? static_cast<std::int16_t>(grid.extent(a - 1)) : 1;
        w.put<std::int16_t>(40 + 2 * static_cast<std::size_t>(a), d);
    }
    w.put<std::int16_t>(70, nifti::dt_float32);
    w.put<std::int16_t>(72, 32);
    w.put<float>(76, meta.orientation.qfac);
    for (int a = 1; a <= 7; ++a) {
        const float s = a <= 3 ? static_cast<float>(meta.spacing[static_cast<std::size_t>(a - 1)]) : 1.0f;
        w.put<float>(76 + 4 * static_cast<std::size_t>(a), s);
    }
    w.put<float>(108, static_cast<float>(nifti::vox_offset));
    w.put<float>(112, 1.0f);
    w.put<float>(116, 0.0f);
    bytes[123] = meta.orientation.xyzt_units;
    const char descrip[] = "spectreg";
    std::memcpy(bytes.data() + 148, descrip, sizeof(descrip) - 1);
    w.put<std::int16_t>(252, meta.orientation.qform_code);
    w.put<std::int16_t>(254, meta.orientation.sform_code);
    for (std::size_t i = 0; i < 3; ++i) {
        w.put<float>(256 + 4 * i, meta.orientation.quatern[i]);
        w.put<float>(268 + 4 * i, meta.orientation.qoffset[i]);
    }
    for (std::size_t i = 0; i < 12; ++i) w.put<float>(280 + 4 * i, meta.orientation.srow[i]);
    std::memcpy(bytes.data() + 344, "n+1\0", 4);

    const auto order = nifti_order(grid.dims());
    for (std::size_t i = 0; i < n; ++i) {
        w.put<float>(static_cast<std::size_t>(nifti::vox_offset) + 4 * static_cast<std::size_t>(order[i]),
                     static_cast<float>(values[i]));
    }
    spit(path, bytes);
}

void write_nifti(const ScalarImage &image, const VolumeMeta &meta, const fs::path &path,
                 const NiftiWriteOptions &options) {
    write_nifti(image.grid(), image.values(), meta, path, options);
}

void write_nifti(const LabelMap &labels, const VolumeMeta &meta, const fs::path &path,
                 const NiftiWriteOptions &options) {
    std::vector<double> values(labels.values().begin(), labels.values().end());
    write_nifti(labels.grid(), values, meta, path, options);
}

// ---------------------------------------------------------------------------------------------
// Raw-manifest fields.

fs::path manifest_path(const fs::path &path) {
    if (fs::is_directory(path)) return path / "phi.json";
    if (path.extension() == ".json") return path;
    if (path.extension() == ".raw") {
        auto p = path;
        return p.replace_extension(".json");
    }
    return fs::path(path.string() + ".json");
}

namespace {

void write_field_impl(const std::string &kind, const Extents &dims, const Extents *band, int channels,
                      std::span<const double> data, const fs::path &path, FieldDtype dtype) {
    const auto manifest = manifest_path(path);
    auto payload = manifest;
    payload.replace_extension(".raw");

    const bool f32 = dtype == FieldDtype::float32;
    std::vector<std::uint8_t> bytes(data.size() * (f32 ? 4 : 8));
    ByteWriter w(bytes, !host_little);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (f32) {
            w.put<float>(4 * i, static_cast<float>(data[i]));
        } else {
            w.put<double>(8 * i, data[i]);
        }
    }
    spit(payload, bytes);

    nlohmann::ordered_json j;
    j["format"] = "spectreg-field";
    j["version"] = 1;
    j["kind"] = kind;
    j["dims"] = dims;
    if (band != nullptr) {
        j["band_dims"] = *band;
    } else {
        j["band_dims"] = nullptr;
    }
    j["channels"] = channels;
    j["dtype"] = f32 ? "float32" : "float64";
    j["byte_order"] = "little";
    j["payload"] = payload.filename().string();
    const auto text = j.dump(2) + "\n";
    spit(manifest, std::vector<std::uint8_t>(text.begin(), text.end()));
}

} // namespace

void write_field(const DenseField &field, const fs::path &path, FieldDtype dtype) {
    write_field_impl("dense", field.grid().dims(), nullptr, field.channels(), field.data(), path, dtype);
}

void write_field(const LowResField &field, const fs::path &path, FieldDtype dtype) {
    write_field_impl("lowres", field.window().parent().dims(), &field.window().band_dims(), field.channels(),
                     field.data(), path, dtype);
}

AnyField read_field(const fs::path &path) {
    const auto manifest = manifest_path(path);
    const auto text = slurp(manifest);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception &e) {
        throw io_error("malformed field manifest " + manifest.string() + ": " + e.what());
    }
    try {
        if (j.value("format", "") != "spectreg-field") throw io_error("not a field manifest: " + manifest.string());
        const auto kind = j.at("kind").get<std::string>();
        const auto dims = j.at("dims").get<Extents>();
        const int channels = j.at("channels").get<int>();
        const auto dtype = j.at("dtype").get<std::string>();
        if (j.at("byte_order").get<std::string>() != "little") throw io_error("unsupported byte order in " + manifest.string());
        if (dtype != "float32" && dtype != "float64") throw io_error("unsupported field dtype " + dtype);
        if (channels != static_cast<int>(dims.size())) {
            throw io_error("manifest " + manifest.string() + " declares " + std::to_string(channels) +
                           " channels for a " + std::to_string(dims.size()) + "-D grid");
        }
        const auto grid = make_grid(dims);
        std::int64_t lane = grid.voxel_count();
        CropWindow window;
        if (kind == "lowres") {
            window = make_window(grid, j.at("band_dims").get<Extents>());
            lane = window.band_count();
        } else if (kind != "dense") {
            throw io_error("unknown field kind " + kind);
        }
        const auto payload_path = manifest.parent_path() / j.at("payload").get<std::string>();
        const auto bytes = slurp(payload_path);
        const std::size_t width = dtype == "float32" ? 4 : 8;
        if (bytes.empty()) throw io_error("empty field payload " + payload_path.string());
        const auto expected = static_cast<std::size_t>(lane * channels) * width;
        if (bytes.size() != expected) {
            throw io_error("field payload " + payload_path.string() + " has " + std::to_string(bytes.size()) +
                           " bytes, manifest implies " + std::to_string(expected));
        }
        const ByteReader r(bytes.data(), bytes.size(), !host_little);
        std::vector<double> data(bytes.size() / width);
        for (std::size_t i = 0; i < data.size(); ++i) {
            data[i] = width == 4 ? static_cast<double>(r.get<float>(4 * i)) : r.get<double>(8 * i);
        }
        if (kind == "lowres") return LowResField(window, std::move(data));
        return DenseField(grid, std::move(data));
    } catch (const nlohmann::json::exception &e) {
        throw io_error("malformed field manifest " + manifest.string() + ": " + e.what());
    } catch (const std::invalid_argument &e) {
        throw io_error("invalid field manifest " + manifest.string() + ": " + e.what());
    }
}

DenseField read_dense_field(const fs::path &path) {
    auto f = read_field(path);
    if (auto *d = std::get_if<DenseField>(&f)) return std::move(*d);
    throw io_error(manifest_path(path).string() + " holds a low-resolution field, expected a dense field");
}

LowResField read_lowres_field(const fs::path &path) {
    auto f = read_field(path);
    if (auto *d = std::get_if<LowResField>(&f)) return std::move(*d);
    throw io_error(manifest_path(path).string() + " holds a dense field, expected a low-resolution field");
}

// ---------------------------------------------------------------------------------------------
// Renders.

namespace {

struct Plane {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    int row_axis = 0;
    int col_axis = 1;
    std::vector<double> values;
};

Plane extract_plane(const GridSpec &grid, std::span<const double> lane, int axis, std::int64_t index) {
    Plane p;
    if (grid.ndim() == 2) {
        p.rows = grid.extent(0);
        p.cols = grid.extent(1);
        p.values.assign(lane.begin(), lane.end());
        return p;
    }
    if (axis < 0 || axis > 2) throw std::invalid_argument("slice axis must be 0, 1 or 2");
    if (index < 0 || index >= grid.extent(axis)) {
        throw std::invalid_argument("slice index " + std::to_string(index) + " out of range for axis " +
                                    std::to_string(axis) + " (extent " + std::to_string(grid.extent(axis)) + ")");
    }
    std::array<int, 2> in_plane{};
    int k = 0;
    for (int a = 0; a < 3; ++a) {
        if (a != axis) in_plane[static_cast<std::size_t>(k++)] = a;
    }
    p.row_axis = in_plane[0];
    p.col_axis = in_plane[1];
    p.rows = grid.extent(p.row_axis);
    p.cols = grid.extent(p.col_axis);
    p.values.resize(static_cast<std::size_t>(p.rows * p.cols));
    const std::array<std::int64_t, 3> strides{grid.extent(1) * grid.extent(2), grid.extent(2), 1};
    for (std::int64_t r = 0; r < p.rows; ++r) {
        for (std::int64_t c = 0; c < p.cols; ++c) {
            const auto flat = index * strides[static_cast<std::size_t>(axis)] +
                              r * strides[static_cast<std::size_t>(p.row_axis)] +
                              c * strides[static_cast<std::size_t>(p.col_axis)];
            p.values[static_cast<std::size_t>(r * p.cols + c)] = lane[static_cast<std::size_t>(flat)];
        }
    }
    return p;
}

std::vector<std::uint8_t> normalize_8bit(const std::vector<double> &values) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    std::vector<std::uint8_t> out(values.size(), 128);
    const double range = *hi - *lo;
    if (!(range > 0.0)) return out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (values[i] - *lo) / range));
    }
    return out;
}

void write_pnm(const fs::path &path, const char *magic, std::int64_t width, std::int64_t height,
               const std::vector<std::uint8_t> &pixels) {
    std::ostringstream head;
    head << magic << "\n" << width << " " << height << "\n255\n";
    const auto h = head.str();
    std::vector<std::uint8_t> bytes(h.begin(), h.end());
    bytes.insert(bytes.end(), pixels.begin(), pixels.end());
    spit(path, bytes);
}

} // namespace

void render_slice(const ScalarImage &image, int axis, std::int64_t index, const fs::path &path) {
    const auto plane = extract_plane(image.grid(), image.values(), axis, index);
    write_pnm(path, "P5", plane.cols, plane.rows, normalize_8bit(plane.values));
}

void render_grid(const DenseField &phi, int stride, int axis, std::int64_t index, const fs::path &path) {
    if (stride < 2) throw std::invalid_argument("grid stride must be at least 2");
    const auto &grid = phi.grid();
    const auto layout = extract_plane(grid, phi.channel(0), axis, index);
    const int row_axis = layout.row_axis;
    const int col_axis = layout.col_axis;
    const auto du = extract_plane(grid, phi.channel(row_axis), axis, index);
    const auto dw = extract_plane(grid, phi.channel(col_axis), axis, index);
    const auto rows = du.rows;
    const auto cols = du.cols;

    const auto plane_grid = make_grid({rows, cols});
    const detail::Geometry<2> geo(plane_grid);
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(rows * cols * 3), 255);
    auto plot = [&](double r, double c) {
        const auto cell = detail::locate<2>(geo, {r, c});
        const double y = r + detail::interpolate(du.values.data(), geo, cell);
        const double x = c + detail::interpolate(dw.values.data(), geo, cell);
        const auto pr = std::lround(y);
        const auto pc = std::lround(x);
        if (pr < 0 || pr >= rows || pc < 0 || pc >= cols) return;
        const auto off = static_cast<std::size_t>((pr * cols + pc) * 3);
        pixels[off] = 24;
        pixels[off + 1] = 24;
        pixels[off + 2] = 64;
    };
    constexpr double step = 0.25;
    for (std::int64_t r = 0; r < rows; r += stride) {
        for (double c = 0.0; c <= static_cast<double>(cols - 1); c += step) plot(static_cast<double>(r), c);
    }
    for (std::int64_t c = 0; c < cols; c += stride) {
        for (double r = 0.0; r <= static_cast<double>(rows - 1); r += step) plot(r, static_cast<double>(c));
    }
    write_pnm(path, "P6", cols, rows, pixels);
}

void render_spectrum(const DenseField &field, int channel, int axis, std::int64_t index, const fs::path &path) {
    if (channel < 0 || channel >= field.channels()) throw std::invalid_argument("channel out of range");
    const auto plane = extract_plane(field.grid(), field.channel(channel), axis, index);
    const Extents dims{plane.rows, plane.cols};
    std::vector<cplx> spec(plane.values.begin(), plane.values.end());
    fft::transform(spec, dims, fft::Direction::forward);
    std::vector<cplx> centered(spec.size());
    for (std::int64_t r = 0; r < plane.rows; ++r) {
        for (std::int64_t c = 0; c < plane.cols; ++c) {
            const auto rr = (r + plane.rows / 2) % plane.rows;
            const auto cc = (c + plane.cols / 2) % plane.cols;
            centered[static_cast<std::size_t>(rr * plane.cols + cc)] = spec[static_cast<std::size_t>(r * plane.cols + c)];
        }
    }
    std::vector<double> mag(centered.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::log1p(std::abs(centered[i]));
    write_pnm(path, "P5", plane.cols, plane.rows, normalize_8bit(mag));
}

Graymap read_pgm(const fs::path &path) {
    const auto bytes = slurp(path);
    std::string head(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 64)));
    std::istringstream is(head);
    std::string magic;
    Graymap g;
    int maxval = 0;
    is >> magic >> g.width >> g.height >> maxval;
    if (magic != "P5" || maxval != 255) throw io_error("not an 8-bit binary graymap: " + path.string());
    const auto offset = static_cast<std::size_t>(is.tellg()) + 1;
    const auto n = static_cast<std::size_t>(g.width * g.height);
    if (bytes.size() < offset + n) throw io_error("truncated graymap " + path.string());
    g.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                    bytes.begin() + static_cast<std::ptrdiff_t>(offset + n));
    return g;
}

} // namespace spectreg
