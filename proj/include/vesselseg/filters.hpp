#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

#include "vesselseg/error.hpp"
#include "vesselseg/parallel.hpp"
#include "vesselseg/volume.hpp"

namespace vesselseg {

// ---------------------------------------------------------------------------
// Line access helpers
// ---------------------------------------------------------------------------

/// Reflect-without-repeat boundary: -1 -> 1, n -> n-2.
[[nodiscard]] inline std::size_t mirror_index(std::ptrdiff_t i, std::size_t n) noexcept
{
    if (n == 1) {
        return 0;
    }
    const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
    i %= period;
    if (i < 0) {
        i += period;
    }
    if (i >= static_cast<std::ptrdiff_t>(n)) {
        i = period - i;
    }
    return static_cast<std::size_t>(i);
}

namespace detail {

/// Applies op(in_line, out_line) to every 1D line of `src` along `axis`,
/// writing into `dst`. Lines are independent so the split across workers
/// cannot change the result.
template <class LineOp>
void transform_lines(const Volume3D& src, Volume3D& dst, std::size_t axis, unsigned threads, LineOp op)
{
    const auto& d = src.dims();
    const std::size_t len = d[axis];
    const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? d.nx : d.nx * d.ny);
    const std::size_t lines = src.size() / len;

    auto line_start = [&](std::size_t line) -> std::size_t {
        switch (axis) {
        case 0: return line * d.nx;
        case 1: return (line % d.nx) + (line / d.nx) * d.nx * d.ny;
        default: return line;
        }
    };

    parallel_for(lines, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> in(len);
        std::vector<double> out(len);
        for (std::size_t line = begin; line < end; ++line) {
            const std::size_t start = line_start(line);
            for (std::size_t i = 0; i < len; ++i) {
                in[i] = src[start + i * stride];
            }
            op(std::as_const(in), out);
            for (std::size_t i = 0; i < len; ++i) {
                dst[start + i * stride] = out[i];
            }
        }
    });
}

inline void require_positive_sigma(double sigma_mm)
{
    if (!(std::isfinite(sigma_mm) && sigma_mm > 0.0)) {
        std::ostringstream msg;
        msg << "smoothing scale must be positive, got " << sigma_mm << " mm";
        throw ParameterError(msg.str());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gaussian scale space
// ---------------------------------------------------------------------------

/// Sampled Gaussian with radius ceil(4*sigma), renormalised to unit sum.
/// Element r is the weight at offset r - radius.
[[nodiscard]] inline std::vector<double> gaussian_kernel(double sigma_voxels)
{
    detail::require_positive_sigma(sigma_voxels);
    const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma_voxels));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::ptrdiff_t r = -radius; r <= radius; ++r) {
        const double x = static_cast<double>(r);
        const double w = std::exp(-x * x / (2.0 * sigma_voxels * sigma_voxels));
        k[static_cast<std::size_t>(r + radius)] = w;
        sum += w;
    }
    for (double& w : k) {
        w /= sum;
    }
    return k;
}

/// Per-axis standard deviation in voxels for a physical scale in mm.
[[nodiscard]] inline std::array<double, 3> voxel_sigmas(const Spacing& spacing, double sigma_mm)
{
    return {sigma_mm / spacing.sx, sigma_mm / spacing.sy, sigma_mm / spacing.sz};
}

/// Separable Gaussian smoothing, isotropic in mm (so anisotropic in voxels
/// when the spacing is), with mirror boundaries.
[[nodiscard]] inline Volume3D gaussian_smooth(const Volume3D& vol, double sigma_mm, unsigned threads = 1)
{
    detail::require_positive_sigma(sigma_mm);
    const auto sigmas = voxel_sigmas(vol.spacing(), sigma_mm);

    Volume3D a = vol;
    Volume3D b = Volume3D::like(vol);
    for (std::size_t axis = 0; axis < 3; ++axis) {
        const auto kernel = gaussian_kernel(sigmas[axis]);
        const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
        detail::transform_lines(a, b, axis, threads,
                                [&](const std::vector<double>& in, std::vector<double>& out) {
                                    const std::size_t n = in.size();
                                    for (std::size_t i = 0; i < n; ++i) {
                                        double acc = 0.0;
                                        for (std::ptrdiff_t r = -radius; r <= radius; ++r) {
                                            const auto j = mirror_index(static_cast<std::ptrdiff_t>(i) + r, n);
                                            acc += kernel[static_cast<std::size_t>(r + radius)] * in[j];
                                        }
                                        out[i] = acc;
                                    }
                                });
        std::swap(a, b);
    }
    return a;
}

// ---------------------------------------------------------------------------
// Hessian
// ---------------------------------------------------------------------------

/// Second spatial derivatives (intensity / mm^2) of a smoothed volume.
struct HessianField {
    Volume3D xx;
    Volume3D yy;
    Volume3D zz;
    Volume3D xy;
    Volume3D xz;
    Volume3D yz;
};

namespace detail {

inline Volume3D second_difference(const Volume3D& f, std::size_t axis, unsigned threads)
{
    Volume3D out = Volume3D::like(f);
    const double inv_h2 = 1.0 / (f.spacing()[axis] * f.spacing()[axis]);
    transform_lines(f, out, axis, threads, [&](const std::vector<double>& in, std::vector<double>& res) {
        const std::size_t n = in.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<std::ptrdiff_t>(i);
            res[i] = (in[mirror_index(ii + 1, n)] - 2.0 * in[i] + in[mirror_index(ii - 1, n)]) * inv_h2;
        }
    });
    return out;
}

inline Volume3D central_difference(const Volume3D& f, std::size_t axis, unsigned threads)
{
    Volume3D out = Volume3D::like(f);
    const double inv_2h = 1.0 / (2.0 * f.spacing()[axis]);
    transform_lines(f, out, axis, threads, [&](const std::vector<double>& in, std::vector<double>& res) {
        const std::size_t n = in.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto ii = static_cast<std::ptrdiff_t>(i);
            res[i] = (in[mirror_index(ii + 1, n)] - in[mirror_index(ii - 1, n)]) * inv_2h;
        }
    });
    return out;
}

}  // namespace detail

/// Smooths at sigma_mm, then takes central finite differences with the
/// physical voxel spacing. Mixed terms are two successive first differences.
[[nodiscard]] inline HessianField hessian(const Volume3D& vol, double sigma_mm, unsigned threads = 1)
{
    detail::require_positive_sigma(sigma_mm);
    const auto& d = vol.dims();
    if (d.nx < 3 || d.ny < 3 || d.nz < 3) {
        throw GeometryError("Hessian needs at least 3 voxels along every axis");
    }
    const Volume3D f = gaussian_smooth(vol, sigma_mm, threads);
    const Volume3D dx = detail::central_difference(f, 0, threads);
    const Volume3D dy = detail::central_difference(f, 1, threads);
    return HessianField{
        .xx = detail::second_difference(f, 0, threads),
        .yy = detail::second_difference(f, 1, threads),
        .zz = detail::second_difference(f, 2, threads),
        .xy = detail::central_difference(dx, 1, threads),
        .xz = detail::central_difference(dx, 2, threads),
        .yz = detail::central_difference(dy, 2, threads),
    };
}

// ---------------------------------------------------------------------------
// Symmetric 3x3 eigenvalues
// ---------------------------------------------------------------------------

/// Upper triangle of a real symmetric 3x3 matrix.
struct SymMatrix3 {
    double xx = 0.0;
    double yy = 0.0;
    double zz = 0.0;
    double xy = 0.0;
    double xz = 0.0;
    double yz = 0.0;

    [[nodiscard]] double trace() const noexcept { return xx + yy + zz; }
    [[nodiscard]] double determinant() const noexcept
    {
        return xx * (yy * zz - yz * yz) - xy * (xy * zz - yz * xz) + xz * (xy * yz - yy * xz);
    }
};

/// Eigenvalues ordered l1 >= l2 >= l3.
class EigenTriple {
public:
    EigenTriple() = default;

    /// Throws ParameterError if the values are not in descending order.
    EigenTriple(double l1, double l2, double l3) : l1_(l1), l2_(l2), l3_(l3)
    {
        if (!(l1 >= l2 && l2 >= l3)) {
            std::ostringstream msg;
            msg << "eigenvalues must be sorted descending, got (" << l1 << ", " << l2 << ", " << l3 << ")";
            throw ParameterError(msg.str());
        }
    }

    [[nodiscard]] static EigenTriple sorted(double a, double b, double c) noexcept
    {
        if (a < b) std::swap(a, b);
        if (b < c) std::swap(b, c);
        if (a < b) std::swap(a, b);
        EigenTriple e;
        e.l1_ = a;
        e.l2_ = b;
        e.l3_ = c;
        return e;
    }

    [[nodiscard]] double l1() const noexcept { return l1_; }
    [[nodiscard]] double l2() const noexcept { return l2_; }
    [[nodiscard]] double l3() const noexcept { return l3_; }

private:
    double l1_ = 0.0;
    double l2_ = 0.0;
    double l3_ = 0.0;
};

namespace detail {

/// Cyclic Jacobi rotations until the off-diagonal part vanishes.
[[nodiscard]] inline EigenTriple jacobi_eigenvalues(const SymMatrix3& m) noexcept
{
    std::array<std::array<double, 3>, 3> a{{{m.xx, m.xy, m.xz}, {m.xy, m.yy, m.yz}, {m.xz, m.yz, m.zz}}};
    for (int sweep = 0; sweep < 64; ++sweep) {
        const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if (off == 0.0) {
            break;
        }
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a[p][q];
                if (apq == 0.0) {
                    continue;
                }
                const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const int r = 3 - p - q;
                const double arp = a[r][p];
                const double arq = a[r][q];
                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = a[q][p] = 0.0;
                a[r][p] = a[p][r] = c * arp - s * arq;
                a[r][q] = a[q][r] = s * arp + c * arq;
            }
        }
    }
    return EigenTriple::sorted(a[0][0], a[1][1], a[2][2]);
}

}  // namespace detail

/// Eigenvalues of a symmetric 3x3 matrix by the trigonometric closed form.
/// Near-multiples of the identity, where that form divides by a vanishing
/// spread, and near-repeated eigenvalues, where it loses precision, go
/// through Jacobi instead.
[[nodiscard]] inline EigenTriple eig_sym3(const SymMatrix3& m)
{
    for (const double v : {m.xx, m.yy, m.zz, m.xy, m.xz, m.yz}) {
        if (!std::isfinite(v)) {
            throw ParameterError("eig_sym3: non-finite matrix entry");
        }
    }
    const double p1 = m.xy * m.xy + m.xz * m.xz + m.yz * m.yz;
    if (p1 == 0.0) {
        return EigenTriple::sorted(m.xx, m.yy, m.zz);
    }
    const double q = m.trace() / 3.0;
    const double dxx = m.xx - q;
    const double dyy = m.yy - q;
    const double dzz = m.zz - q;
    const double p2 = dxx * dxx + dyy * dyy + dzz * dzz + 2.0 * p1;
    const double scale = std::max({std::abs(m.xx), std::abs(m.yy), std::abs(m.zz), std::abs(m.xy),
                                   std::abs(m.xz), std::abs(m.yz)});
    if (p2 <= 1e-20 * scale * scale) {
        return detail::jacobi_eigenvalues(m);
    }
    const double p = std::sqrt(p2 / 6.0);
    const SymMatrix3 b{dxx / p, dyy / p, dzz / p, m.xy / p, m.xz / p, m.yz / p};
    const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    // acos is ill-conditioned at |r| -> 1, i.e. when two eigenvalues nearly
    // coincide; the closed form then loses about half the digits.
    if (std::min(std::abs(e1 - e2), std::abs(e2 - e3)) < 1e-3 * p) {
        return detail::jacobi_eigenvalues(m);
    }
    return EigenTriple::sorted(e1, e2, e3);
}

// ---------------------------------------------------------------------------
// Line (bright tube) measure
// ---------------------------------------------------------------------------

struct SatoParams {
    double gamma23 = 1.0;
    double gamma12 = 1.0;
    double alpha = 0.25;

    void validate() const
    {
        if (!(gamma23 > 0.0 && gamma12 > 0.0 && alpha > 0.0) ||
            !(std::isfinite(gamma23) && std::isfinite(gamma12) && std::isfinite(alpha))) {
            throw ParameterError("line-filter exponents and alpha must be positive and finite");
        }
    }
};

namespace detail {

[[nodiscard]] inline double power(double base, double exponent) noexcept
{
    return exponent == 1.0 ? base : std::pow(base, exponent);
}

}  // namespace detail

/// Bright-line response. Zero unless l3 <= l2 < 0; the l1 weight rewards a
/// flat profile along the tube and fades out as l1 grows positive.
[[nodiscard]] inline double sato_vesselness(const EigenTriple& e, const SatoParams& params = {}) noexcept
{
    const double l1 = e.l1();
    const double l2 = e.l2();
    const double l3 = e.l3();
    if (!(l3 <= l2 && l2 < 0.0)) {
        return 0.0;
    }
    const double abs_l2 = -l2;
    double weight = 0.0;
    if (l1 <= 0.0) {
        weight = detail::power(1.0 + l1 / abs_l2, params.gamma12);
    } else if (l1 < abs_l2 / params.alpha) {
        weight = detail::power(1.0 - params.alpha * l1 / abs_l2, params.gamma12);
    }
    return -l3 * detail::power(l2 / l3, params.gamma23) * weight;
}

struct VesselnessMap {
    Volume3D scores;
    double scale_mm = 0.0;
};

/// Line-enhanced volume at one scale: Hessian, eigenvalues, line measure.
/// Responses are multiplied by sigma_mm^2 so maps at different scales are in
/// the same (intensity) units; a tube responds most at the scale matching
/// its width. Relative thresholds are unaffected by this factor.
[[nodiscard]] inline VesselnessMap vessel_enhance(const Volume3D& vol, double sigma_mm, const SatoParams& params = {},
                                                  unsigned threads = 1)
{
    params.validate();
    const HessianField h = hessian(vol, sigma_mm, threads);
    Volume3D scores = Volume3D::like(vol);
    const double normalization = sigma_mm * sigma_mm;
    parallel_for(vol.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const SymMatrix3 m{h.xx[i], h.yy[i], h.zz[i], h.xy[i], h.xz[i], h.yz[i]};
            scores[i] = normalization * sato_vesselness(eig_sym3(m), params);
        }
    });
    return {std::move(scores), sigma_mm};
}

}  // namespace vesselseg
