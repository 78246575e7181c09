#pragma once

// Synthetic tube phantoms with exact ground truth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vesselseg/error.hpp"
#include "vesselseg/parallel.hpp"
#include "vesselseg/text.hpp"
#include "vesselseg/volume.hpp"

namespace vesselseg {

using Vec3 = std::array<double, 3>;

namespace detail {

[[nodiscard]] inline Vec3 sub(const Vec3& a, const Vec3& b) noexcept { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
[[nodiscard]] inline double dot(const Vec3& a, const Vec3& b) noexcept { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
[[nodiscard]] inline double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }
[[nodiscard]] inline Vec3 axpy(double s, const Vec3& x, const Vec3& y) noexcept
{
    return {s * x[0] + y[0], s * x[1] + y[1], s * x[2] + y[2]};
}

}  // namespace detail

/// Straight centreline from `start` to `end` (mm).
struct LineSegment {
    Vec3 start{};
    Vec3 end{};

    [[nodiscard]] double distance(const Vec3& p) const noexcept
    {
        const Vec3 axis = detail::sub(end, start);
        const double len2 = detail::dot(axis, axis);
        double t = len2 > 0.0 ? detail::dot(detail::sub(p, start), axis) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        return detail::norm(detail::sub(p, detail::axpy(t, axis, start)));
    }

    [[nodiscard]] Vec3 point(double t) const noexcept { return detail::axpy(t, detail::sub(end, start), start); }
};

/// Circular centreline: center + R (cos a u + sin a v) for a in
/// [start_deg, end_deg]. u and v span the plane of the arc.
struct CircularArc {
    Vec3 center{};
    Vec3 u{1.0, 0.0, 0.0};
    Vec3 v{0.0, 1.0, 0.0};
    double arc_radius_mm = 1.0;
    double start_deg = 0.0;
    double end_deg = 90.0;

    [[nodiscard]] Vec3 point(double t) const noexcept
    {
        const double a = (start_deg + t * (end_deg - start_deg)) * std::numbers::pi / 180.0;
        const auto [eu, ev] = basis();
        return detail::axpy(arc_radius_mm * std::sin(a), ev, detail::axpy(arc_radius_mm * std::cos(a), eu, center));
    }

    [[nodiscard]] double distance(const Vec3& p) const noexcept
    {
        const auto [eu, ev] = basis();
        const Vec3 rel = detail::sub(p, center);
        const double pu = detail::dot(rel, eu);
        const double pv = detail::dot(rel, ev);
        const double lo = std::min(start_deg, end_deg);
        const double hi = std::max(start_deg, end_deg);
        double a = std::atan2(pv, pu) * 180.0 / std::numbers::pi;
        // Bring the angle into [lo, lo + 360).
        a = lo + std::fmod(std::fmod(a - lo, 360.0) + 360.0, 360.0);
        double best = std::min(detail::norm(detail::sub(p, point(0.0))), detail::norm(detail::sub(p, point(1.0))));
        if (a <= hi) {
            const double rad = a * std::numbers::pi / 180.0;
            const Vec3 q = detail::axpy(arc_radius_mm * std::sin(rad), ev,
                                        detail::axpy(arc_radius_mm * std::cos(rad), eu, center));
            best = std::min(best, detail::norm(detail::sub(p, q)));
        }
        return best;
    }

    /// Gram-Schmidt orthonormalised (u, v).
    [[nodiscard]] std::pair<Vec3, Vec3> basis() const noexcept
    {
        const double nu = detail::norm(u);
        const Vec3 eu{u[0] / nu, u[1] / nu, u[2] / nu};
        const Vec3 w = detail::axpy(-detail::dot(v, eu), eu, v);
        const double nw = detail::norm(w);
        return {eu, Vec3{w[0] / nw, w[1] / nw, w[2] / nw}};
    }
};

struct TubeSpec {
    std::variant<LineSegment, CircularArc> path;
    double radius_mm = 1.0;
    double contrast = 1.0;  // peak intensity above background

    [[nodiscard]] double distance(const Vec3& p) const noexcept
    {
        return std::visit([&](const auto& c) { return c.distance(p); }, path);
    }
    [[nodiscard]] Vec3 point(double t) const noexcept
    {
        return std::visit([&](const auto& c) { return c.point(t); }, path);
    }
};

struct PhantomSpec {
    Dims dims{64, 64, 64};
    Spacing spacing{};
    std::vector<TubeSpec> tubes;
    double background = 0.0;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// Identifies the noise stream so recorded experiments can be regenerated.
inline constexpr std::string_view kNoiseGenerator = "splitmix64-indexed/box-muller";

/// Ground truth of one tube: its own voxels, and the voxels for which it is
/// the nearest centreline (used to score each tube separately).
struct TubeTruth {
    double radius_mm = 0.0;
    BinaryMask mask;
    BinaryMask territory;
};

struct Phantom {
    Volume3D volume;
    BinaryMask truth;
    std::vector<TubeTruth> tubes;
};

namespace detail {

[[nodiscard]] inline Vec3 voxel_center(const Spacing& s, std::size_t x, std::size_t y, std::size_t z) noexcept
{
    return {static_cast<double>(x) * s.sx, static_cast<double>(y) * s.sy, static_cast<double>(z) * s.sz};
}

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Standard normal deviate that depends only on (seed, voxel index).
[[nodiscard]] inline double indexed_normal(std::uint64_t seed, std::uint64_t index) noexcept
{
    const std::uint64_t base = splitmix64(seed ^ splitmix64(index));
    const std::uint64_t a = splitmix64(base);
    const std::uint64_t b = splitmix64(base + 1);
    constexpr double kInv53 = 1.0 / 9007199254740992.0;
    const double u1 = static_cast<double>((a >> 11) + 1) * kInv53;  // (0, 1]
    const double u2 = static_cast<double>(b >> 11) * kInv53;        // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

inline void PhantomSpec::validate() const
{
    Geometry{dims, spacing, {}}.validate();
    if (!(noise_sigma >= 0.0 && std::isfinite(noise_sigma)) || !std::isfinite(background)) {
        throw ParameterError("phantom noise_sigma must be non-negative and background finite");
    }
    const Vec3 extent{static_cast<double>(dims.nx - 1) * spacing.sx, static_cast<double>(dims.ny - 1) * spacing.sy,
                      static_cast<double>(dims.nz - 1) * spacing.sz};
    for (std::size_t k = 0; k < tubes.size(); ++k) {
        const auto& t = tubes[k];
        if (!(t.radius_mm > 0.0 && t.contrast > 0.0)) {
            throw ParameterError("tube " + std::to_string(k) + ": radius and contrast must be positive");
        }
        if (const auto* arc = std::get_if<CircularArc>(&t.path)) {
            if (!(arc->arc_radius_mm > 0.0) || detail::norm(arc->u) == 0.0 ||
                detail::norm(detail::axpy(-detail::dot(arc->v, arc->u) / detail::dot(arc->u, arc->u), arc->u,
                                          arc->v)) == 0.0) {
                throw ParameterError("tube " + std::to_string(k) + ": degenerate arc");
            }
        }
        constexpr int kSamples = 256;
        for (int s = 0; s <= kSamples; ++s) {
            const Vec3 p = t.point(static_cast<double>(s) / kSamples);
            for (std::size_t a = 0; a < 3; ++a) {
                if (!(p[a] >= -1e-9 && p[a] <= extent[a] + 1e-9)) {
                    throw ParameterError("tube " + std::to_string(k) + ": centreline leaves the volume");
                }
            }
        }
    }
}

/// Intensity = background + sum of contrast * exp(-d^2 / (2 (r/2)^2)) over
/// tubes, plus noise_sigma * N(0,1). Truth = centreline distance <= radius.
[[nodiscard]] inline Phantom generate_phantom(const PhantomSpec& spec, unsigned threads = 1)
{
    spec.validate();
    Geometry geom{spec.dims, spec.spacing, {}};
    Phantom ph{Volume3D(geom, spec.background), BinaryMask(geom), {}};
    for (const auto& t : spec.tubes) {
        ph.tubes.push_back({t.radius_mm, BinaryMask(geom), BinaryMask(geom)});
    }

    const auto& d = spec.dims;
    parallel_for(d.nz, threads, [&](std::size_t z_begin, std::size_t z_end) {
        std::vector<double> dist(spec.tubes.size());
        for (std::size_t z = z_begin; z < z_end; ++z) {
            for (std::size_t y = 0; y < d.ny; ++y) {
                for (std::size_t x = 0; x < d.nx; ++x) {
                    const std::size_t i = ph.volume.index(x, y, z);
                    const Vec3 p = detail::voxel_center(spec.spacing, x, y, z);
                    double value = spec.background;
                    std::size_t nearest = 0;
                    for (std::size_t k = 0; k < spec.tubes.size(); ++k) {
                        const auto& t = spec.tubes[k];
                        dist[k] = t.distance(p);
                        const double s = t.radius_mm / 2.0;
                        value += t.contrast * std::exp(-dist[k] * dist[k] / (2.0 * s * s));
                        if (dist[k] <= t.radius_mm) {
                            ph.tubes[k].mask[i] = 1;
                            ph.truth[i] = 1;
                        }
                        if (dist[k] < dist[nearest]) {
                            nearest = k;
                        }
                    }
                    if (!spec.tubes.empty()) {
                        ph.tubes[nearest].territory[i] = 1;
                    }
                    if (spec.noise_sigma > 0.0) {
                        value += spec.noise_sigma * detail::indexed_normal(spec.rng_seed, i);
                    }
                    ph.volume[i] = value;
                }
            }
        }
    });
    return ph;
}

/// Parses a phantom description:
///
///     dims = 128 128 128
///     spacing = 0.47 0.47 0.8
///     background = 0
///     noise_sigma = 0.1
///     seed = 42
///     tube = line x0 y0 z0 x1 y1 z1 radius contrast
///     tube = arc cx cy cz ux uy uz vx vy vz arc_radius start_deg end_deg radius contrast
///
/// Coordinates are mm from the centre of voxel (0, 0, 0).
[[nodiscard]] inline PhantomSpec parse_phantom_spec(std::istream& in)
{
    PhantomSpec spec;
    spec.tubes.clear();
    text::for_each_entry(in, [&](std::string_view key, std::string_view value, std::size_t line) {
        const std::string where = "phantom line " + std::to_string(line);
        try {
            if (key == "dims") {
                const auto f = text::split_list(value);
                if (f.size() != 3) {
                    throw ParameterError("dims expects 3 values");
                }
                std::array<std::size_t, 3> n{};
                for (std::size_t a = 0; a < 3; ++a) {
                    const auto v = text::parse_int(f[a], "dims");
                    if (v <= 0) {
                        throw ParameterError("dims must be positive");
                    }
                    n[a] = static_cast<std::size_t>(v);
                }
                spec.dims = {n[0], n[1], n[2]};
            } else if (key == "spacing") {
                const auto v = text::parse_doubles(value, 3, "spacing");
                spec.spacing = {v[0], v[1], v[2]};
            } else if (key == "background") {
                spec.background = text::parse_double(value, key);
            } else if (key == "noise_sigma") {
                spec.noise_sigma = text::parse_double(value, key);
            } else if (key == "seed") {
                const auto v = text::parse_int(value, key);
                if (v < 0) {
                    throw ParameterError("seed must be non-negative");
                }
                spec.rng_seed = static_cast<std::uint64_t>(v);
            } else if (key == "tube") {
                const auto fields = text::split_list(value);
                if (fields.empty()) {
                    throw ParameterError("tube needs a kind (line or arc)");
                }
                const std::string_view kind = fields.front();
                const auto rest = value.substr(value.find(kind) + kind.size());
                if (kind == "line") {
                    const auto v = text::parse_doubles(rest, 8, "line tube");
                    spec.tubes.push_back({LineSegment{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}}, v[6], v[7]});
                } else if (kind == "arc") {
                    const auto v = text::parse_doubles(rest, 14, "arc tube");
                    spec.tubes.push_back(
                        {CircularArc{{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, v[9], v[10], v[11]},
                         v[12], v[13]});
                } else {
                    throw ParameterError("unknown tube kind '" + std::string(kind) + "'");
                }
            } else {
                throw ParameterError("unknown key '" + std::string(key) + "'");
            }
        } catch (const ParameterError& e) {
            throw ParameterError(where + ": " + e.what());
        }
    });
    spec.validate();
    return spec;
}

[[nodiscard]] inline PhantomSpec load_phantom_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ReadError("cannot open phantom spec " + path.string());
    }
    return parse_phantom_spec(in);
}

}  // namespace vesselseg
