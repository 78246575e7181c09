#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <vector>

#include "vesselseg/error.hpp"
#include "vesselseg/filters.hpp"
#include "vesselseg/neighborhood.hpp"
#include "vesselseg/volume.hpp"

namespace vesselseg {

/// Fractions of the anchor intensity used as low/high hysteresis thresholds.
struct FractionPair {
    double low = 0.0;
    double high = 0.0;

    void validate() const
    {
        if (!(low > 0.0 && low < high && high <= 1.0)) {
            std::ostringstream msg;
            msg << "threshold fractions must satisfy 0 < low < high <= 1, got (" << low << ", " << high << ")";
            throw ParameterError(msg.str());
        }
    }
    friend bool operator==(const FractionPair&, const FractionPair&) = default;
};

/// Absolute hysteresis thresholds (LTV/HTV) and the fractions they came from.
class ThresholdPair {
public:
    ThresholdPair(double low, double high, FractionPair fractions)
        : low_(low), high_(high), fractions_(fractions)
    {
        fractions_.validate();
        check();
    }

    /// Unvalidated fractions; allows low == high, which reduces hysteresis to
    /// a plain threshold.
    [[nodiscard]] static ThresholdPair absolute(double low, double high)
    {
        ThresholdPair t;
        t.low_ = low;
        t.high_ = high;
        t.check();
        return t;
    }

    [[nodiscard]] double low() const noexcept { return low_; }
    [[nodiscard]] double high() const noexcept { return high_; }
    [[nodiscard]] const FractionPair& fractions() const noexcept { return fractions_; }

private:
    ThresholdPair() = default;

    void check() const
    {
        if (!(std::isfinite(low_) && std::isfinite(high_) && low_ > 0.0 && low_ <= high_)) {
            std::ostringstream msg;
            msg << "thresholds must satisfy 0 < low <= high, got (" << low_ << ", " << high_ << ")";
            throw ParameterError(msg.str());
        }
    }

    double low_ = 0.0;
    double high_ = 0.0;
    FractionPair fractions_{};
};

inline constexpr double kAnchorPercentile = 99.9;

/// Thresholds as fractions of the map's nearest-rank percentile over its
/// positive voxels.
[[nodiscard]] inline ThresholdPair relative_thresholds(const VesselnessMap& map, FractionPair fractions,
                                                       double anchor_percentile = kAnchorPercentile)
{
    fractions.validate();
    const double anchor = percentile(map.scores, anchor_percentile, true);
    return {fractions.low * anchor, fractions.high * anchor, fractions};
}

/// Voxels at or above `high`, plus voxels at or above `low` connected to them
/// through such voxels.
[[nodiscard]] inline BinaryMask hysteresis(const Volume3D& intensities, const ThresholdPair& th,
                                           Connectivity connectivity = Connectivity::Corner)
{
    BinaryMask out = BinaryMask::like(intensities);
    const auto& d = intensities.dims();
    const auto offsets = neighbor_offsets(connectivity);

    std::vector<std::size_t> frontier;
    for (std::size_t i = 0; i < intensities.size(); ++i) {
        if (intensities[i] >= th.high()) {
            out[i] = 1;
            frontier.push_back(i);
        }
    }

    const auto nx = static_cast<std::ptrdiff_t>(d.nx);
    const auto ny = static_cast<std::ptrdiff_t>(d.ny);
    const auto nz = static_cast<std::ptrdiff_t>(d.nz);
    while (!frontier.empty()) {
        const std::size_t i = frontier.back();
        frontier.pop_back();
        const auto x = static_cast<std::ptrdiff_t>(i % d.nx);
        const auto y = static_cast<std::ptrdiff_t>((i / d.nx) % d.ny);
        const auto z = static_cast<std::ptrdiff_t>(i / (d.nx * d.ny));
        for (const auto& o : offsets) {
            const auto xx = x + o.dx;
            const auto yy = y + o.dy;
            const auto zz = z + o.dz;
            if (xx < 0 || yy < 0 || zz < 0 || xx >= nx || yy >= ny || zz >= nz) {
                continue;
            }
            const auto j = static_cast<std::size_t>(xx + nx * (yy + ny * zz));
            if (out[j] == 0 && intensities[j] >= th.low()) {
                out[j] = 1;
                frontier.push_back(j);
            }
        }
    }
    return out;
}

[[nodiscard]] inline BinaryMask hysteresis(const VesselnessMap& map, const ThresholdPair& th,
                                           Connectivity connectivity = Connectivity::Corner)
{
    return hysteresis(map.scores, th, connectivity);
}

/// Single threshold: voxels with intensity >= t.
[[nodiscard]] inline BinaryMask threshold_at(const Volume3D& intensities, double t)
{
    BinaryMask out = BinaryMask::like(intensities);
    for (std::size_t i = 0; i < intensities.size(); ++i) {
        out[i] = intensities[i] >= t ? 1 : 0;
    }
    return out;
}

[[nodiscard]] inline BinaryMask union_masks(const BinaryMask& a, const BinaryMask& b)
{
    require_same_grid(a, b, "union_masks");
    BinaryMask out = a;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (a[i] != 0 || b[i] != 0) ? 1 : 0;
    }
    return out;
}

}  // namespace vesselseg
