#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vesselseg/error.hpp"

namespace vesselseg {

struct Dims {
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::size_t nz = 0;

    [[nodiscard]] constexpr std::size_t count() const noexcept { return nx * ny * nz; }
    [[nodiscard]] constexpr std::size_t operator[](std::size_t axis) const noexcept
    {
        return axis == 0 ? nx : (axis == 1 ? ny : nz);
    }
    friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

/// Voxel size in mm along each axis.
struct Spacing {
    double sx = 1.0;
    double sy = 1.0;
    double sz = 1.0;

    [[nodiscard]] constexpr double operator[](std::size_t axis) const noexcept
    {
        return axis == 0 ? sx : (axis == 1 ? sy : sz);
    }
    friend constexpr bool operator==(const Spacing&, const Spacing&) = default;
};

/// NIfTI-1 spatial metadata. Carried verbatim from input to output; the
/// library never interprets it.
struct Orientation {
    std::int16_t qform_code = 1;
    std::int16_t sform_code = 0;
    float quatern_b = 0.0F;
    float quatern_c = 0.0F;
    float quatern_d = 0.0F;
    float qoffset_x = 0.0F;
    float qoffset_y = 0.0F;
    float qoffset_z = 0.0F;
    float qfac = 1.0F;
    std::array<float, 4> srow_x{0.0F, 0.0F, 0.0F, 0.0F};
    std::array<float, 4> srow_y{0.0F, 0.0F, 0.0F, 0.0F};
    std::array<float, 4> srow_z{0.0F, 0.0F, 0.0F, 0.0F};
    std::uint8_t xyzt_units = 2;  // NIFTI_UNITS_MM

    friend bool operator==(const Orientation&, const Orientation&) = default;
};

struct Geometry {
    Dims dims;
    Spacing spacing;
    Orientation orientation;

    /// Throws InvalidGeometryError unless every extent is positive and every
    /// spacing component is positive and finite.
    void validate() const
    {
        if (dims.nx == 0 || dims.ny == 0 || dims.nz == 0) {
            throw InvalidGeometryError("volume dimensions must be positive");
        }
        for (std::size_t a = 0; a < 3; ++a) {
            const double s = spacing[a];
            if (!(std::isfinite(s) && s > 0.0)) {
                std::ostringstream msg;
                msg << "voxel spacing along axis " << a << " must be positive and finite, got " << s;
                throw InvalidGeometryError(msg.str());
            }
        }
    }

    /// dims and spacing agree; orientation is metadata and not compared.
    [[nodiscard]] bool same_grid(const Geometry& other) const noexcept
    {
        return dims == other.dims && spacing == other.spacing;
    }
};

/// Dense scalar volume stored x-fastest (index = x + nx*(y + ny*z)).
template <class T>
class Volume {
public:
    using value_type = T;

    Volume() = default;

    explicit Volume(Geometry geometry, T fill = T{})
        : geometry_(std::move(geometry))
    {
        geometry_.validate();
        data_.assign(geometry_.dims.count(), fill);
    }

    Volume(Geometry geometry, std::vector<T> data)
        : geometry_(std::move(geometry)), data_(std::move(data))
    {
        geometry_.validate();
        if (data_.size() != geometry_.dims.count()) {
            throw GeometryError("voxel buffer length does not match volume dimensions");
        }
    }

    /// New volume on the same grid as `other`, filled with `fill`.
    template <class U>
    [[nodiscard]] static Volume like(const Volume<U>& other, T fill = T{})
    {
        return Volume(other.geometry(), fill);
    }

    [[nodiscard]] const Geometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] const Dims& dims() const noexcept { return geometry_.dims; }
    [[nodiscard]] const Spacing& spacing() const noexcept { return geometry_.spacing; }
    [[nodiscard]] const Orientation& orientation() const noexcept { return geometry_.orientation; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept
    {
        return x + geometry_.dims.nx * (y + geometry_.dims.ny * z);
    }

    [[nodiscard]] T& operator()(std::size_t x, std::size_t y, std::size_t z) noexcept
    {
        return data_[index(x, y, z)];
    }
    [[nodiscard]] const T& operator()(std::size_t x, std::size_t y, std::size_t z) const noexcept
    {
        return data_[index(x, y, z)];
    }
    [[nodiscard]] T& operator[](std::size_t i) noexcept { return data_[i]; }
    [[nodiscard]] const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    [[nodiscard]] std::span<T> values() noexcept { return data_; }
    [[nodiscard]] std::span<const T> values() const noexcept { return data_; }

    [[nodiscard]] auto begin() noexcept { return data_.begin(); }
    [[nodiscard]] auto end() noexcept { return data_.end(); }
    [[nodiscard]] auto begin() const noexcept { return data_.begin(); }
    [[nodiscard]] auto end() const noexcept { return data_.end(); }

    friend bool operator==(const Volume& a, const Volume& b)
    {
        return a.geometry_.same_grid(b.geometry_) && a.data_ == b.data_;
    }

private:
    Geometry geometry_;
    std::vector<T> data_;
};

using Volume3D = Volume<double>;

/// Vessel mask; voxels hold 0 or 1.
using BinaryMask = Volume<std::uint8_t>;

[[nodiscard]] inline double voxel_volume(const Spacing& s) noexcept { return s.sx * s.sy * s.sz; }

template <class T>
[[nodiscard]] double voxel_volume(const Volume<T>& vol) noexcept
{
    return voxel_volume(vol.spacing());
}

template <class A, class B>
void require_same_grid(const Volume<A>& a, const Volume<B>& b, const char* what)
{
    if (!a.geometry().same_grid(b.geometry())) {
        throw GeometryError(std::string(what) + ": volumes do not share dimensions and spacing");
    }
}

[[nodiscard]] inline std::size_t count_set(const BinaryMask& mask) noexcept
{
    return static_cast<std::size_t>(
        std::count_if(mask.begin(), mask.end(), [](std::uint8_t v) { return v != 0; }));
}

/// Nearest-rank percentile: the value at 1-based rank ceil(p/100 * N) of the
/// ascending sort of the eligible voxels. With `restrict_to_positive` only
/// voxels strictly greater than zero are eligible.
template <class T>
[[nodiscard]] double percentile(const Volume<T>& vol, double p, bool restrict_to_positive = true)
{
    if (!(p > 0.0 && p <= 100.0)) {
        std::ostringstream msg;
        msg << "percentile must lie in (0, 100], got " << p;
        throw ParameterError(msg.str());
    }
    std::vector<double> eligible;
    eligible.reserve(vol.size());
    for (const T v : vol) {
        const auto d = static_cast<double>(v);
        if (!restrict_to_positive || d > 0.0) {
            eligible.push_back(d);
        }
    }
    if (eligible.empty()) {
        throw EmptySelectionError(restrict_to_positive ? "no positive voxels to take a percentile over"
                                                       : "cannot take a percentile of an empty volume");
    }
    const auto n = eligible.size();
    // p is usually a short decimal (99.9); products that land within rounding
    // of an integer are taken as that integer rather than ceil'd past it.
    const double exact = p * static_cast<double>(n) / 100.0;
    const double nearest = std::round(exact);
    const double position = std::abs(exact - nearest) <= 1e-9 * std::max(1.0, exact) ? nearest : std::ceil(exact);
    const auto rank = std::clamp<std::size_t>(static_cast<std::size_t>(position), 1, n);
    auto nth = eligible.begin() + static_cast<std::ptrdiff_t>(rank - 1);
    std::nth_element(eligible.begin(), nth, eligible.end());
    return *nth;
}

template <class T>
[[nodiscard]] bool has_positive(const Volume<T>& vol) noexcept
{
    return std::any_of(vol.begin(), vol.end(), [](T v) { return v > T{}; });
}

}  // namespace vesselseg
