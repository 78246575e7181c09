#pragma once

// Single-file NIfTI-1 (.nii / .nii.gz) reader and writer.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "vesselseg/error.hpp"
#include "vesselseg/volume.hpp"

namespace vesselseg {

enum class NiftiDatatype : std::int16_t {
    UInt8 = 2,
    Int16 = 4,
    Int32 = 8,
    Float32 = 16,
    Float64 = 64,
};

[[nodiscard]] inline const char* to_string(NiftiDatatype dt) noexcept
{
    switch (dt) {
    case NiftiDatatype::UInt8: return "uint8";
    case NiftiDatatype::Int16: return "int16";
    case NiftiDatatype::Int32: return "int32";
    case NiftiDatatype::Float32: return "float32";
    case NiftiDatatype::Float64: return "float64";
    }
    return "unknown";
}

/// Header fields the tools report besides the geometry.
struct NiftiInfo {
    NiftiDatatype datatype = NiftiDatatype::Float32;
    double scl_slope = 1.0;
    double scl_inter = 0.0;
    bool byte_swapped = false;
};

namespace nifti_detail {

inline constexpr std::size_t kHeaderSize = 348;
inline constexpr std::size_t kDefaultVoxOffset = 352;

[[nodiscard]] inline std::size_t bytes_per_voxel(NiftiDatatype dt) noexcept
{
    switch (dt) {
    case NiftiDatatype::UInt8: return 1;
    case NiftiDatatype::Int16: return 2;
    case NiftiDatatype::Int32: return 4;
    case NiftiDatatype::Float32: return 4;
    case NiftiDatatype::Float64: return 8;
    }
    return 0;
}

[[nodiscard]] inline bool is_gzip_path(const std::filesystem::path& path)
{
    const auto name = path.filename().string();
    return name.size() >= 3 && name.compare(name.size() - 3, 3, ".gz") == 0;
}

template <class T>
[[nodiscard]] T byteswap_value(T v) noexcept
{
    std::array<unsigned char, sizeof(T)> bytes{};
    std::memcpy(bytes.data(), &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
        std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    std::memcpy(&v, bytes.data(), sizeof(T));
    return v;
}

/// Fixed-offset field access into a raw header, in file byte order.
class HeaderView {
public:
    HeaderView(const unsigned char* bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    template <class T>
    [[nodiscard]] T get(std::size_t offset) const noexcept
    {
        T v{};
        std::memcpy(&v, bytes_ + offset, sizeof(T));
        return swap_ ? byteswap_value(v) : v;
    }

private:
    const unsigned char* bytes_;
    bool swap_;
};

/// Header written in host byte order; readers detect order from sizeof_hdr.
class HeaderBuilder {
public:
    HeaderBuilder() { bytes_.fill(0); }

    template <class T>
    void put(std::size_t offset, T v) noexcept
    {
        std::memcpy(bytes_.data() + offset, &v, sizeof(T));
    }

    void put_chars(std::size_t offset, const char* text, std::size_t max_len) noexcept
    {
        std::memcpy(bytes_.data() + offset, text, std::min(std::strlen(text), max_len));
    }

    [[nodiscard]] const std::array<unsigned char, kDefaultVoxOffset>& bytes() const noexcept { return bytes_; }

private:
    std::array<unsigned char, kDefaultVoxOffset> bytes_{};
};

[[nodiscard]] inline std::vector<unsigned char> slurp(const std::filesystem::path& path)
{
    // gzread passes uncompressed files through unchanged.
    gzFile file = gzopen(path.string().c_str(), "rb");
    if (file == nullptr) {
        throw ReadError("cannot open " + path.string());
    }
    std::vector<unsigned char> out;
    std::array<unsigned char, 1 << 16> chunk{};
    for (;;) {
        const int n = gzread(file, chunk.data(), static_cast<unsigned>(chunk.size()));
        if (n < 0) {
            int errnum = 0;
            const std::string reason = gzerror(file, &errnum);
            gzclose(file);
            throw CorruptFileError("decompression failed for " + path.string() + ": " + reason);
        }
        if (n == 0) {
            break;
        }
        out.insert(out.end(), chunk.begin(), chunk.begin() + n);
    }
    gzclose(file);
    return out;
}

inline void dump(const std::filesystem::path& path, const std::vector<unsigned char>& bytes)
{
    if (is_gzip_path(path)) {
        gzFile file = gzopen(path.string().c_str(), "wb6");
        if (file == nullptr) {
            throw WriteError("cannot open " + path.string() + " for writing");
        }
        std::size_t written = 0;
        while (written < bytes.size()) {
            const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - written, 1U << 30));
            if (gzwrite(file, bytes.data() + written, chunk) != static_cast<int>(chunk)) {
                gzclose(file);
                throw WriteError("write failed for " + path.string());
            }
            written += chunk;
        }
        if (gzclose(file) != Z_OK) {
            throw WriteError("write failed for " + path.string());
        }
        return;
    }
    std::FILE* file = std::fopen(path.string().c_str(), "wb");
    if (file == nullptr) {
        throw WriteError("cannot open " + path.string() + " for writing");
    }
    const bool ok = std::fwrite(bytes.data(), 1, bytes.size(), file) == bytes.size();
    if (std::fclose(file) != 0 || !ok) {
        throw WriteError("write failed for " + path.string());
    }
}

template <class Raw>
void decode_voxels(const unsigned char* src, std::size_t n, bool swap, double slope, double inter,
                   std::vector<double>& out)
{
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Raw v{};
        std::memcpy(&v, src + i * sizeof(Raw), sizeof(Raw));
        if (swap) {
            v = byteswap_value(v);
        }
        out[i] = static_cast<double>(v) * slope + inter;
    }
}

template <class Raw, class T>
void encode_voxels(const Volume<T>& vol, std::vector<unsigned char>& out, std::size_t offset)
{
    std::size_t pos = offset;
    for (const T v : vol) {
        const auto raw = static_cast<Raw>(v);
        std::memcpy(out.data() + pos, &raw, sizeof(Raw));
        pos += sizeof(Raw);
    }
}

[[nodiscard]] inline std::vector<unsigned char> make_header(const Geometry& g, NiftiDatatype dt)
{
    HeaderBuilder h;
    const auto& o = g.orientation;
    h.put<std::int32_t>(0, static_cast<std::int32_t>(kHeaderSize));
    h.put<std::int16_t>(40, 3);
    h.put<std::int16_t>(42, static_cast<std::int16_t>(g.dims.nx));
    h.put<std::int16_t>(44, static_cast<std::int16_t>(g.dims.ny));
    h.put<std::int16_t>(46, static_cast<std::int16_t>(g.dims.nz));
    for (std::size_t i = 4; i < 8; ++i) {
        h.put<std::int16_t>(40 + 2 * i, 1);
    }
    h.put<std::int16_t>(70, static_cast<std::int16_t>(dt));
    h.put<std::int16_t>(72, static_cast<std::int16_t>(8 * bytes_per_voxel(dt)));
    h.put<float>(76, o.qfac);
    h.put<float>(80, static_cast<float>(g.spacing.sx));
    h.put<float>(84, static_cast<float>(g.spacing.sy));
    h.put<float>(88, static_cast<float>(g.spacing.sz));
    h.put<float>(92, 1.0F);
    h.put<float>(108, static_cast<float>(kDefaultVoxOffset));
    h.put<float>(112, 1.0F);
    h.put<float>(116, 0.0F);
    h.put<std::uint8_t>(123, o.xyzt_units);
    h.put_chars(148, "vesselseg", 80);
    h.put<std::int16_t>(252, o.qform_code);
    h.put<std::int16_t>(254, o.sform_code);
    h.put<float>(256, o.quatern_b);
    h.put<float>(260, o.quatern_c);
    h.put<float>(264, o.quatern_d);
    h.put<float>(268, o.qoffset_x);
    h.put<float>(272, o.qoffset_y);
    h.put<float>(276, o.qoffset_z);
    for (std::size_t i = 0; i < 4; ++i) {
        h.put<float>(280 + 4 * i, o.srow_x[i]);
        h.put<float>(296 + 4 * i, o.srow_y[i]);
        h.put<float>(312 + 4 * i, o.srow_z[i]);
    }
    h.put_chars(344, "n+1", 4);
    return {h.bytes().begin(), h.bytes().end()};
}

[[nodiscard]] inline bool representable_as_float(const Volume3D& vol) noexcept
{
    return std::all_of(vol.begin(), vol.end(), [](double v) {
        return std::abs(v) <= std::numeric_limits<float>::max() &&
               static_cast<double>(static_cast<float>(v)) == v;
    });
}

template <class Raw, class T>
void write_as(const Volume<T>& vol, NiftiDatatype dt, const std::filesystem::path& path)
{
    for (std::size_t a = 0; a < 3; ++a) {
        if (vol.dims()[a] > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max())) {
            throw WriteError("volume extent exceeds the NIfTI-1 limit of 32767 voxels");
        }
    }
    auto bytes = make_header(vol.geometry(), dt);
    bytes.resize(kDefaultVoxOffset + vol.size() * sizeof(Raw));
    encode_voxels<Raw>(vol, bytes, kDefaultVoxOffset);
    dump(path, bytes);
}

}  // namespace nifti_detail

/// Load a single-file NIfTI-1 volume. Intensities are converted to double
/// with scl_slope/scl_inter applied (slope 0 means "unscaled").
inline Volume3D read_nifti(const std::filesystem::path& path, NiftiInfo* info = nullptr)
{
    using namespace nifti_detail;
    const auto bytes = slurp(path);
    if (bytes.size() < kHeaderSize) {
        throw CorruptFileError(path.string() + ": file shorter than a NIfTI-1 header");
    }

    std::int32_t sizeof_hdr = 0;
    std::memcpy(&sizeof_hdr, bytes.data(), sizeof sizeof_hdr);
    bool swap = false;
    if (sizeof_hdr != static_cast<std::int32_t>(kHeaderSize)) {
        if (byteswap_value(sizeof_hdr) != static_cast<std::int32_t>(kHeaderSize)) {
            throw CorruptFileError(path.string() + ": header size field is not 348");
        }
        swap = true;
    }
    if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0) {
        throw FormatError(path.string() + ": missing single-file NIfTI-1 magic \"n+1\"");
    }

    const HeaderView h(bytes.data(), swap);
    const auto ndim = h.get<std::int16_t>(40);
    if (ndim < 1 || ndim > 7) {
        throw CorruptFileError(path.string() + ": dim[0] out of range");
    }
    std::array<std::int64_t, 7> extent{1, 1, 1, 1, 1, 1, 1};
    for (int i = 0; i < ndim; ++i) {
        extent[static_cast<std::size_t>(i)] = h.get<std::int16_t>(42 + 2 * static_cast<std::size_t>(i));
        if (extent[static_cast<std::size_t>(i)] < 1) {
            throw CorruptFileError(path.string() + ": non-positive dimension");
        }
    }
    for (std::size_t i = 3; i < 7; ++i) {
        if (extent[i] != 1) {
            throw InvalidGeometryError(path.string() + ": only 3D volumes (or 4D with a single frame) are supported");
        }
    }

    const auto code = h.get<std::int16_t>(70);
    NiftiDatatype dt{};
    switch (code) {
    case 2: dt = NiftiDatatype::UInt8; break;
    case 4: dt = NiftiDatatype::Int16; break;
    case 8: dt = NiftiDatatype::Int32; break;
    case 16: dt = NiftiDatatype::Float32; break;
    case 64: dt = NiftiDatatype::Float64; break;
    default:
        throw UnsupportedDatatypeError(path.string() + ": unsupported NIfTI datatype code " + std::to_string(code));
    }

    Geometry geom;
    geom.dims = {static_cast<std::size_t>(extent[0]), static_cast<std::size_t>(extent[1]),
                 static_cast<std::size_t>(extent[2])};
    const float px = h.get<float>(80);
    const float py = h.get<float>(84);
    const float pz = h.get<float>(88);
    for (const float p : {px, py, pz}) {
        if (!(std::isfinite(p) && p > 0.0F)) {
            throw InvalidGeometryError(path.string() + ": non-positive pixel dimension");
        }
    }
    geom.spacing = {px, py, pz};

    auto& o = geom.orientation;
    o.qfac = h.get<float>(76);
    o.xyzt_units = h.get<std::uint8_t>(123);
    o.qform_code = h.get<std::int16_t>(252);
    o.sform_code = h.get<std::int16_t>(254);
    o.quatern_b = h.get<float>(256);
    o.quatern_c = h.get<float>(260);
    o.quatern_d = h.get<float>(264);
    o.qoffset_x = h.get<float>(268);
    o.qoffset_y = h.get<float>(272);
    o.qoffset_z = h.get<float>(276);
    for (std::size_t i = 0; i < 4; ++i) {
        o.srow_x[i] = h.get<float>(280 + 4 * i);
        o.srow_y[i] = h.get<float>(296 + 4 * i);
        o.srow_z[i] = h.get<float>(312 + 4 * i);
    }

    const float vox_offset_f = h.get<float>(108);
    if (!(std::isfinite(vox_offset_f) && vox_offset_f >= 0.0F)) {
        throw CorruptFileError(path.string() + ": invalid vox_offset");
    }
    const auto vox_offset = std::max<std::size_t>(static_cast<std::size_t>(vox_offset_f), kHeaderSize);

    double slope = h.get<float>(112);
    double inter = h.get<float>(116);
    if (slope == 0.0 || !std::isfinite(slope)) {
        slope = 1.0;
        inter = 0.0;
    }
    if (!std::isfinite(inter)) {
        inter = 0.0;
    }

    const std::size_t n = geom.dims.count();
    const std::size_t need = n * bytes_per_voxel(dt);
    if (bytes.size() < vox_offset || bytes.size() - vox_offset < need) {
        throw CorruptFileError(path.string() + ": voxel data shorter than the header dimensions require");
    }

    std::vector<double> values;
    const unsigned char* src = bytes.data() + vox_offset;
    switch (dt) {
    case NiftiDatatype::UInt8: decode_voxels<std::uint8_t>(src, n, swap, slope, inter, values); break;
    case NiftiDatatype::Int16: decode_voxels<std::int16_t>(src, n, swap, slope, inter, values); break;
    case NiftiDatatype::Int32: decode_voxels<std::int32_t>(src, n, swap, slope, inter, values); break;
    case NiftiDatatype::Float32: decode_voxels<float>(src, n, swap, slope, inter, values); break;
    case NiftiDatatype::Float64: decode_voxels<double>(src, n, swap, slope, inter, values); break;
    }
    for (const double v : values) {
        if (!std::isfinite(v)) {
            throw CorruptFileError(path.string() + ": volume contains NaN or Inf intensities");
        }
    }

    if (info != nullptr) {
        *info = {dt, slope, inter, swap};
    }
    return {std::move(geom), std::move(values)};
}

/// Intensity volumes are stored as float32 when that is lossless and float64
/// otherwise, so a reload is always bit-exact.
inline void write_nifti(const Volume3D& vol, const std::filesystem::path& path)
{
    using namespace nifti_detail;
    if (representable_as_float(vol)) {
        write_as<float>(vol, NiftiDatatype::Float32, path);
    } else {
        write_as<double>(vol, NiftiDatatype::Float64, path);
    }
}

/// Masks are stored as uint8 {0,1} with unit slope.
inline void write_nifti(const BinaryMask& mask, const std::filesystem::path& path)
{
    nifti_detail::write_as<std::uint8_t>(mask, NiftiDatatype::UInt8, path);
}

/// Reads any supported file and binarises it (nonzero -> 1).
inline BinaryMask read_mask(const std::filesystem::path& path)
{
    const auto vol = read_nifti(path);
    BinaryMask mask(vol.geometry());
    for (std::size_t i = 0; i < vol.size(); ++i) {
        mask[i] = vol[i] != 0.0 ? 1 : 0;
    }
    return mask;
}

}  // namespace vesselseg
